import { App } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new App(root);
  void app.start().catch((err) => {
    root.innerHTML = `<p class="empty">failed to load: ${String(err)}</p>`;
  });
});
