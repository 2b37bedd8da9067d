import { Client } from "./api.js";
import { App } from "./app.js";

// served at /ui from the annotation service itself, so the API shares
// the page's origin; ?api=<base> points elsewhere during development
const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? window.location.origin;
const root = document.getElementById("app");
if (root) new App(root, new Client(base));
