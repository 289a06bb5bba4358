import { SessionClient } from "./client.js";
import { ConsoleUi } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const address =
  params.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;

let ui: ConsoleUi;
const client = new SessionClient(address, (url) => new WebSocket(url), {
  onStatus: (status) => ui.onStatus(status),
  onEvent: (frame) => ui.onEvent(frame),
});
ui = new ConsoleUi(client);
ui.bind();
