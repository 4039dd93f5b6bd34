/** DOM wiring: renders LabelSession state onto the canvas and side panels,
 * forwards pointer/keyboard events, and talks to the service via ApiClient.
 */

import { ApiClient, ConflictError } from "./api.js";
import { pointInQuad } from "./geometry.js";
import { LabelSession } from "./session.js";
import type { DetectionDoc, Heuristic, ImageSummary } from "./types.js";
import { VISUAL_TAGS, type VisualTag } from "./types.js";

const api = new ApiClient("");

const imageList = byId<HTMLUListElement>("image-list");
const canvas = byId<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d")!;
const statusLine = byId<HTMLDivElement>("status");
const progressBar = byId<HTMLProgressElement>("progress");
const lotTable = byId<HTMLTableSectionElement>("lot-rows");
const tagBox = byId<HTMLDivElement>("tag-box");
const modeButton = byId<HTMLButtonElement>("mode-toggle");
const saveButton = byId<HTMLButtonElement>("save");
const undoButton = byId<HTMLButtonElement>("undo");
const conflictDialog = byId<HTMLDialogElement>("conflict-dialog");
const reloadButton = byId<HTMLButtonElement>("conflict-reload");
const tauSlider = byId<HTMLInputElement>("tau");
const tauValue = byId<HTMLSpanElement>("tau-value");
const heuristicSelect = byId<HTMLSelectElement>("heuristic");
const detectionsInput = byId<HTMLInputElement>("detections-file");
const previewError = byId<HTMLDivElement>("preview-error");

let session: LabelSession | null = null;
let images: ImageSummary[] = [];
let backdrop: HTMLImageElement | null = null;
let detections: DetectionDoc[] | null = null;

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function refreshImageList(): Promise<void> {
  images = await api.listImages();
  imageList.replaceChildren(
    ...images.map((img) => {
      const item = document.createElement("li");
      item.textContent = `${img.path} (${img.labeled_count}/${img.lot_count})`;
      item.classList.toggle("active", session?.imageId === img.id);
      item.onclick = () => void openImage(img.id);
      return item;
    }),
  );
}

async function openImage(imageId: string): Promise<void> {
  if (session?.unsavedChanges && !confirm("Discard unsaved changes?")) return;
  const envelope = await api.getAnnotations(imageId);
  session = new LabelSession(imageId, envelope.revision, envelope.annotation);
  backdrop = null;
  const img = new Image();
  img.onload = () => {
    backdrop = img;
    render();
  };
  img.onerror = () => render(); // annotations without a stored image file
  img.src = api.imageFileUrl(imageId);
  canvas.width = envelope.annotation.width;
  canvas.height = envelope.annotation.height;
  await refreshImageList();
  render();
}

function lotColor(lot: { id: string; occupied: boolean | null }): string {
  const overlay = session?.overlays.get(lot.id);
  if (overlay) return overlay.decided === "occupied" ? "#d8434388" : "#43d87a88";
  if (lot.occupied === true) return "#d8434355";
  if (lot.occupied === false) return "#43d87a55";
  return "#d8c84355";
}

function render(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (backdrop) ctx.drawImage(backdrop, 0, 0, canvas.width, canvas.height);
  if (!session) return;

  session.lots.forEach((lot, index) => {
    ctx.beginPath();
    lot.quad.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.closePath();
    ctx.fillStyle = lotColor(lot);
    ctx.fill();
    ctx.lineWidth = index === session!.currentIndex ? 3 : 1;
    ctx.strokeStyle = index === session!.currentIndex ? "#ffffff" : "#222222";
    ctx.stroke();
    const [lx, ly] = lot.quad[0];
    ctx.fillStyle = "#ffffff";
    const overlay = session!.overlays.get(lot.id);
    ctx.fillText(overlay ? `${lot.id} ${overlay.ratio.toFixed(2)}` : lot.id, lx + 3, ly + 12);
  });

  ctx.fillStyle = session.draftError ? "#ff5555" : "#55aaff";
  for (const [x, y] of session.draft) {
    ctx.beginPath();
    ctx.arc(x, y, 4, 0, 2 * Math.PI);
    ctx.fill();
  }

  renderPanels();
}

function renderPanels(): void {
  if (!session) return;
  progressBar.value = session.progress;
  statusLine.textContent =
    `${session.imagePath} — lot ${session.lots.length === 0 ? 0 : session.currentIndex + 1}` +
    `/${session.lots.length}, ${session.labeledCount} labeled` +
    `${session.unsavedChanges ? " (unsaved)" : ""}` +
    `${session.draftError ? ` — ${session.draftError}` : ""}`;
  saveButton.disabled = !session.unsavedChanges;
  undoButton.disabled = session.undoDepth === 0;
  modeButton.textContent = session.mode === "draw" ? "mode: draw quads" : "mode: label";

  lotTable.replaceChildren(
    ...session.lots.map((lot, index) => {
      const row = document.createElement("tr");
      row.classList.toggle("active", index === session!.currentIndex);
      const status =
        lot.occupied === true ? "occupied" : lot.occupied === false ? "free" : "unlabeled";
      const overlay = session!.overlays.get(lot.id);
      row.innerHTML =
        `<td>${lot.id}</td><td>${status}</td>` +
        `<td>${overlay ? `${overlay.decided} @ ${overlay.ratio.toFixed(3)}` : ""}</td>`;
      const erase = document.createElement("td");
      const eraseButton = document.createElement("button");
      eraseButton.textContent = "erase";
      eraseButton.onclick = () => {
        session!.eraseLot(index);
        render();
      };
      erase.appendChild(eraseButton);
      row.appendChild(erase);
      row.onclick = () => {
        session!.currentIndex = index;
        render();
      };
      return row;
    }),
  );

  for (const input of tagBox.querySelectorAll<HTMLInputElement>("input")) {
    input.checked = session.tags.includes(input.value as VisualTag);
  }
}

function buildTagBox(): void {
  tagBox.replaceChildren(
    ...VISUAL_TAGS.map((tag) => {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "checkbox";
      input.value = tag;
      input.onchange = () => {
        session?.toggleTag(tag);
        render();
      };
      label.append(input, ` ${tag}`);
      return label;
    }),
  );
}

async function save(): Promise<void> {
  if (!session) return;
  try {
    const revision = await api.putAnnotations(
      session.imageId, session.revision, session.toAnnotation(),
    );
    session.markSaved(revision);
    await refreshImageList();
    render();
  } catch (error) {
    if (error instanceof ConflictError) {
      conflictDialog.showModal();
    } else {
      alert(String(error));
    }
  }
}

async function runPreview(): Promise<void> {
  if (!session || detections === null) return;
  previewError.textContent = "";
  try {
    const response = await api.decidePreview(
      session.imageId, detections,
      heuristicSelect.value as Heuristic, Number(tauSlider.value),
    );
    session.applyPreview(response.results);
  } catch (error) {
    previewError.textContent = String(error);
    session.clearPreview();
  }
  render();
}

canvas.addEventListener("click", (event) => {
  if (!session) return;
  const rect = canvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
  if (session.mode === "draw") {
    session.addDraftPoint(x, y);
  } else {
    const hit = session.lots.findIndex((lot) => pointInQuad(x, y, lot.quad));
    if (hit >= 0) session.currentIndex = hit;
  }
  render();
});

document.addEventListener("keydown", (event) => {
  if (!session || event.target instanceof HTMLInputElement) return;
  switch (event.key.toUpperCase()) {
    case "O":
    case "F":
    case "U":
      session.labelCurrent(event.key.toUpperCase() as "O" | "F" | "U");
      break;
    case "ARROWRIGHT":
      session.next();
      break;
    case "ARROWLEFT":
      session.previous();
      break;
    case "Z":
      if (event.ctrlKey || event.metaKey) session.undo();
      break;
    case "ESCAPE":
      session.retractDraftPoint();
      break;
    case "D":
      session.mode = session.mode === "draw" ? "label" : "draw";
      break;
    default:
      return;
  }
  event.preventDefault();
  render();
});

modeButton.onclick = () => {
  if (!session) return;
  session.mode = session.mode === "draw" ? "label" : "draw";
  render();
};
saveButton.onclick = () => void save();
undoButton.onclick = () => {
  session?.undo();
  render();
};
reloadButton.onclick = () => {
  conflictDialog.close();
  if (session) void openImage(session.imageId);
};
tauSlider.oninput = () => {
  tauValue.textContent = Number(tauSlider.value).toFixed(2);
  void runPreview();
};
heuristicSelect.onchange = () => void runPreview();
detectionsInput.onchange = async () => {
  const file = detectionsInput.files?.[0];
  if (!file) return;
  try {
    const doc = JSON.parse(await file.text()) as
      | { detections: DetectionDoc[] }
      | { detections: DetectionDoc[] }[];
    const forImage = Array.isArray(doc)
      ? (doc.find((d) => "image" in d && (d as { image?: string }).image === session?.imagePath)
          ?? doc[0])
      : doc;
    detections = forImage?.detections ?? [];
    await runPreview();
  } catch (error) {
    previewError.textContent = `detections file: ${String(error)}`;
  }
};

buildTagBox();
void refreshImageList().then(() => {
  if (images.length > 0) void openImage(images[0].id);
});
