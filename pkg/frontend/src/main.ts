import { App } from "./app";
import { QbcClient } from "./api";

// The bundle can be served by the session service itself (same origin) or
// any static host pointed at it with ?api=http://host:port.
const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? window.location.origin;

const root = document.querySelector<HTMLDivElement>("#app");
if (!root) throw new Error("missing #app container");

new App(root, new QbcClient(base)).init().catch((err) => {
  root.replaceChildren(`failed to start: ${(err as Error).message}`);
});
