/** Browser bootstrap: binds the DOM to the session controller. All
 * review logic lives in controller.ts/view.ts, which are DOM-free. */

import { ApiClient, type Verdict } from "./api.js";
import { ReviewSession } from "./controller.js";
import { render } from "./view.js";

function appElement(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) {
    throw new Error("missing #app container");
  }
  return el;
}

function renderAnnotatorForm(el: HTMLElement): void {
  el.innerHTML =
    `<form class="annotator" id="annotator-form">` +
    `<label for="annotator-id">annotator id</label> ` +
    `<input id="annotator-id" name="annotator" autocomplete="off" autofocus /> ` +
    `<button type="submit">start reviewing</button></form>`;
  const form = document.getElementById("annotator-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = document.getElementById("annotator-id") as HTMLInputElement;
    const annotator = input.value.trim();
    if (annotator) {
      window.localStorage.setItem("flawfic-annotator", annotator);
      startSession(el, annotator);
    }
  });
}

function startSession(el: HTMLElement, annotator: string): void {
  const token = new URLSearchParams(window.location.search).get("token");
  const session = new ReviewSession(new ApiClient("", token), annotator);
  session.subscribe((state) => {
    el.innerHTML = render(state);
  });

  el.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) {
      return;
    }
    const action = target.dataset["action"];
    if (action === "vote") {
      void session.castVote(target.dataset["verdict"] as Verdict);
    } else if (action === "retry") {
      void session.retry();
    }
  });

  window.addEventListener("keydown", (event) => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return;
    }
    if (event.target instanceof HTMLInputElement) {
      return;
    }
    void session.keydown(event.key);
  });

  void session.start();
}

const el = appElement();
const remembered = window.localStorage.getItem("flawfic-annotator");
if (remembered) {
  startSession(el, remembered);
} else {
  renderAnnotatorForm(el);
}
