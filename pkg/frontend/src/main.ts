import { ApiClient } from "./api.js";
import { App } from "./app.js";

const api = new ApiClient("");
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
const app = new App(api, root);

window.addEventListener("hashchange", () => void app.route(window.location.hash));
void app.route(window.location.hash || "#/catalog");
