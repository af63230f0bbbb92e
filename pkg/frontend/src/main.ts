// Browser entry point. The service origin defaults to same-origin and
// can be overridden with ?service=http://host:port for local use.

import { Api } from "./api.js";
import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "";
const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
mountApp(document, root, new Api(base), window);
