import { ApiClient } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8000";

new App(document, new ApiClient(base));
