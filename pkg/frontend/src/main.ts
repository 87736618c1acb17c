/** Browser entry point.
 *
 * The API base URL defaults to same-origin and can be overridden either with
 * an `?api=` query parameter or by defining `window.ADAPROMPT_API_BASE`
 * before this script loads.
 */

import { ApiClient } from "./api.js";
import { AnnotatorApp } from "./controller.js";

declare global {
  interface Window {
    ADAPROMPT_API_BASE?: string;
  }
}

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? window.ADAPROMPT_API_BASE ?? "";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app container");
}

const app = new AnnotatorApp(new ApiClient(base), root, window.localStorage, {
  window: window,
});
app.start();
