/**
 * Interactive judging loop: fetch the next pair, show the two views side by
 * side, capture a choice, post it, repeat until the session is done.
 *
 * The app keeps no client-side progress — the current pair descriptor is its
 * only session state, so a page refresh simply resumes from the service.
 * Choices stay disabled until both media elements have settled, so neither
 * side gains a head start from loading first. The page renders only the
 * fields the service sends (media URIs and a progress counter); it never
 * shows narration text, scores, or policy names.
 */

import { ApiError, PairView, StudyClient, Verdict } from "./api.js";

const VIDEO_EXTENSIONS = [".mp4", ".webm", ".ogv", ".mov"];

function isVideoUri(uri: string): boolean {
  const path = uri.split("?")[0].toLowerCase();
  return VIDEO_EXTENSIONS.some((ext) => path.endsWith(ext));
}

export class JudgeApp {
  private readonly doc: Document;
  private current: PairView | null = null;
  private choicesEnabled = false;
  private choiceButtons: HTMLButtonElement[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly client: StudyClient,
  ) {
    this.doc = root.ownerDocument;
    this.doc.addEventListener("keydown", this.onKeyDown);
  }

  start(): void {
    this.loadNext();
  }

  dispose(): void {
    this.doc.removeEventListener("keydown", this.onKeyDown);
  }

  private loadNext(): void {
    this.current = null;
    this.choicesEnabled = false;
    this.renderMessage("Loading the next pair…");
    this.client.nextPair().then(
      (pair) => (pair === null ? this.renderDone() : this.renderPair(pair)),
      () => this.renderRetry(() => this.loadNext()),
    );
  }

  private choose(verdict: Verdict): void {
    if (this.current === null || !this.choicesEnabled) {
      return;
    }
    const pairIndex = this.current.pair_index;
    this.choicesEnabled = false;
    for (const button of this.choiceButtons) {
      button.disabled = true;
    }
    this.submit(pairIndex, verdict);
  }

  private submit(pairIndex: number, verdict: Verdict): void {
    this.client.submitJudgment(pairIndex, verdict).then(
      () => this.loadNext(),
      (error) => {
        if (error instanceof ApiError && (error.status === 409 || error.status === 400)) {
          // 409: the service already holds this judgment (a retry after a
          // lost response) — advancing is the correct, non-double-counting
          // move. 400: we are out of step with the service, which owns
          // progress; resync by asking it what to show next.
          this.loadNext();
          return;
        }
        this.renderRetry(() => this.submit(pairIndex, verdict));
      },
    );
  }

  private onKeyDown = (event: KeyboardEvent): void => {
    let verdict: Verdict | null = null;
    if (event.key === "ArrowLeft") {
      verdict = "first";
    } else if (event.key === "ArrowRight") {
      verdict = "second";
    } else if (event.key === " " || event.key === "Spacebar") {
      verdict = "both";
    }
    if (verdict !== null && this.current !== null && this.choicesEnabled) {
      event.preventDefault();
      this.choose(verdict);
    }
  };

  private renderPair(pair: PairView): void {
    this.current = pair;
    this.choicesEnabled = false;

    const header = this.doc.createElement("p");
    header.className = "progress";
    header.textContent = `Pair ${pair.progress.done + 1} of ${pair.progress.total}`;

    const mediaRow = this.doc.createElement("div");
    mediaRow.className = "media-row";
    const media = [
      this.createMedia(pair.left_uri, "Left view"),
      this.createMedia(pair.right_uri, "Right view"),
    ];
    for (const element of media) {
      const cell = this.doc.createElement("div");
      cell.className = "media-cell";
      cell.append(element);
      mediaRow.append(cell);
    }

    const controls = this.doc.createElement("div");
    controls.className = "controls";
    this.choiceButtons = [
      this.createChoiceButton("Left", "first"),
      this.createChoiceButton("Equally informative", "both"),
      this.createChoiceButton("Right", "second"),
    ];
    controls.append(...this.choiceButtons);

    const hint = this.doc.createElement("p");
    hint.className = "hint";
    hint.textContent =
      "Which view shows the activity more clearly? Keys: ← left, → right, space for equal.";

    this.root.replaceChildren(header, mediaRow, controls, hint);
    this.gateChoicesOnMedia(media);
  }

  private createMedia(uri: string, label: string): HTMLElement {
    if (isVideoUri(uri)) {
      const video = this.doc.createElement("video");
      video.src = uri;
      video.muted = true;
      video.autoplay = true;
      video.loop = true;
      video.controls = true;
      video.setAttribute("playsinline", "");
      video.setAttribute("aria-label", label);
      return video;
    }
    const image = this.doc.createElement("img");
    image.src = uri;
    image.alt = label;
    return image;
  }

  private createChoiceButton(label: string, verdict: Verdict): HTMLButtonElement {
    const button = this.doc.createElement("button");
    button.type = "button";
    button.textContent = label;
    button.disabled = true;
    button.dataset.verdict = verdict;
    button.addEventListener("click", () => this.choose(verdict));
    return button;
  }

  /** Enable the choice buttons only once both media elements have settled. */
  private gateChoicesOnMedia(media: HTMLElement[]): void {
    const pair = this.current;
    let remaining = media.length;
    const settled = () => {
      remaining -= 1;
      if (remaining === 0 && this.current === pair) {
        this.choicesEnabled = true;
        for (const button of this.choiceButtons) {
          button.disabled = false;
        }
      }
    };
    for (const element of media) {
      const once = { once: true };
      if (element instanceof HTMLVideoElement) {
        if (element.readyState >= 2 /* HAVE_CURRENT_DATA */) {
          settled();
          continue;
        }
        element.addEventListener("loadeddata", settled, once);
        element.addEventListener("error", settled, once);
      } else if (element instanceof HTMLImageElement) {
        if (element.complete) {
          settled();
          continue;
        }
        element.addEventListener("load", settled, once);
        element.addEventListener("error", settled, once);
      } else {
        settled();
      }
    }
  }

  private renderDone(): void {
    const heading = this.doc.createElement("h2");
    heading.textContent = "Session complete";
    const thanks = this.doc.createElement("p");
    thanks.textContent = "Thank you — every pair has been judged.";
    this.root.replaceChildren(heading, thanks);
  }

  private renderMessage(text: string): void {
    const message = this.doc.createElement("p");
    message.className = "status";
    message.textContent = text;
    this.root.replaceChildren(message);
  }

  private renderRetry(retry: () => void): void {
    const banner = this.doc.createElement("div");
    banner.className = "retry-banner";
    const message = this.doc.createElement("p");
    message.textContent =
      "Connection problem — your last action was not confirmed. Nothing is lost.";
    const button = this.doc.createElement("button");
    button.type = "button";
    button.textContent = "Retry";
    button.addEventListener("click", retry, { once: true });
    banner.append(message, button);
    this.root.replaceChildren(banner);
  }
}
