import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8764";

const root = document.getElementById("triage-root");
if (!root) throw new Error("missing #triage-root");

const app = createApp(root, new ApiClient(apiBase));
document.addEventListener("keydown", (event) => app.handleKey(event));
void app.loadNext();
