import { RecapClient } from "./api";
import { App } from "./app";

const params = new URLSearchParams(window.location.search);
const client = new RecapClient({
  baseUrl: params.get("service") ?? "",
  actor: params.get("actor") ?? "anonymous",
});

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = new App(root, client);

const meetingId = params.get("meeting");
if (meetingId) {
  void app.openMeeting(meetingId);
}
