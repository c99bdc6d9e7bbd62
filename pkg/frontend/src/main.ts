/** Entry point: ?subject=<id>&session=<id> against the serving origin. */

import { ServiceClient } from "./api.js";
import { SessionController } from "./session.js";
import { buildSessionView } from "./ui.js";

async function bootstrap(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const subject = params.get("subject");
  const session = params.get("session");
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  if (!subject || !session) {
    root.textContent = "Provide ?subject=<id>&session=<id> in the URL.";
    return;
  }
  const client = new ServiceClient("");
  const config = await client.config();
  await client.register(subject);
  const controller = new SessionController(client, subject, session, config);
  buildSessionView(root, controller, config);
  await controller.start();
}

void bootstrap();
