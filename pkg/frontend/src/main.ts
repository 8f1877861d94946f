/** Browser entry point: bootstrap from URL parameters and run the loop. */

import { App } from "./app.js";
import { configFromSearch } from "./config.js";

function boot(): void {
  const container = document.getElementById("app");
  if (!container) return;
  const cfg = configFromSearch(window.location.search);
  if (typeof cfg === "string") {
    container.textContent = `${cfg} — expected ?server=HOST:PORT&session=ID&token=TOKEN[&debug=1]`;
    return;
  }
  const app = new App(document, container, cfg);
  app.start();

  const loop = () => {
    app.view.renderAt(performance.now());
    app.checkStale();
    window.requestAnimationFrame(loop);
  };
  window.requestAnimationFrame(loop);
}

boot();
