import { initDashboard } from "./dashboard.js";
if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => initDashboard(document));
}
else {
    initDashboard(document);
}
