import { ExperimentApi } from "./api.js";
import { ExperimentApp } from "./ui.js";
import type { AppOptions } from "./ui.js";

/** Mount the experiment client; exported for automated harnesses. */
export function startApp(
  root: HTMLElement,
  baseUrl = "",
  options: AppOptions = {},
): ExperimentApp {
  const app = new ExperimentApp(root, new ExperimentApi(baseUrl), options);
  void app.start();
  return app;
}

declare global {
  interface Window {
    rooneybenchApp?: ExperimentApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  const condition = params.get("condition");
  const options: AppOptions = {};
  if (condition === "rooney" || condition === "control" || condition === "random") {
    options.condition = condition;
  }
  window.rooneybenchApp = startApp(
    document.getElementById("app") as HTMLElement, "", options,
  );
}
