/**
 * Page bootstrap: read the session and judge ids from the URL query string
 * and hand control to the judging loop. The page must be served from the
 * same origin as the study service, so the client can use relative
 * `/api/...` paths.
 */

import { StudyClient } from "./api.js";
import { JudgeApp } from "./app.js";

function bootstrap(): void {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app container");
  }
  const params = new URLSearchParams(window.location.search);
  const session = params.get("session");
  const judge = params.get("judge");
  if (!session || !judge) {
    const message = document.createElement("p");
    message.className = "status";
    message.textContent =
      "This study link is incomplete — it must include both a session and a judge parameter.";
    root.replaceChildren(message);
    return;
  }
  new JudgeApp(root, new StudyClient("", session, judge)).start();
}

bootstrap();
