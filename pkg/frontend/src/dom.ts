/** Small DOM helpers; the app builds elements directly, no framework. */

interface ElOptions {
  className?: string;
  dataset?: Record<string, string>;
  attrs?: Record<string, string>;
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  options: ElOptions = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (options.className) node.className = options.className;
  if (options.dataset) {
    for (const [key, value] of Object.entries(options.dataset)) node.dataset[key] = value;
  }
  if (options.attrs) {
    for (const [key, value] of Object.entries(options.attrs)) {
      if (key === "disabled") {
        (node as unknown as { disabled: boolean }).disabled = value === "true";
      } else {
        node.setAttribute(key, value);
      }
    }
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Swap a text node for an input; Enter or blur commits, Escape cancels. */
export function inlineEditor(
  target: HTMLElement,
  initial: string,
  commit: (value: string) => void,
): HTMLInputElement {
  const input = el("input", {
    className: "inline-editor",
    attrs: { type: "text", value: initial },
  }) as HTMLInputElement;
  input.value = initial;
  const finish = (save: boolean) => {
    const value = input.value.trim();
    input.replaceWith(target);
    if (save && value && value !== initial) commit(value);
  };
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") finish(true);
    if (event.key === "Escape") finish(false);
  });
  input.addEventListener("blur", () => finish(true));
  target.replaceWith(input);
  input.focus();
  return input;
}

export function formatClock(ms: number): string {
  const total = Math.floor(ms / 1000);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return h ? `${String(h).padStart(2, "0")}:${mm}:${ss}` : `${mm}:${ss}`;
}
