// Browser entry point: mounts the console and hooks up the clip form
// (file upload and microphone recording).

import { createApp } from "./app.js";
import { Recorder } from "./audio.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = createApp(root);

const fileInput = document.getElementById("clip-file") as HTMLInputElement | null;
fileInput?.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (file) await app.submitClip(await file.arrayBuffer());
  fileInput.value = "";
});

const recordButton = document.getElementById("record") as HTMLButtonElement | null;
if (recordButton) {
  let recorder: Recorder | null = null;
  recordButton.addEventListener("click", async () => {
    if (!recorder) {
      recorder = new Recorder();
      await recorder.start();
      recordButton.textContent = "Stop";
    } else {
      const blob = await recorder.stop();
      recorder = null;
      recordButton.textContent = "Record";
      await app.submitClip(await blob.arrayBuffer());
    }
  });
}
