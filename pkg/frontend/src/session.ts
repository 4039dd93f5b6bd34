/** Labeling-session state machine: quad drawing, O/F/U labeling, undo, and
 * heuristic-preview overlays. Framework-free so it is directly unit-testable;
 * the DOM layer in main.ts only renders this state and forwards events.
 */

import { canonicalQuad, withinBounds } from "./geometry.js";
import type { AnnotationDoc, LotDoc, PreviewResult, Vec2 } from "./types.js";
import { VISUAL_TAGS, type VisualTag } from "./types.js";

export type Occupancy = boolean | null;

export interface CanvasLot {
  id: string;
  quad: Vec2[];
  occupied: Occupancy;
}

export interface OverlayState {
  decided: "occupied" | "free";
  ratio: number;
}

export type Mode = "draw" | "label";

interface Snapshot {
  lots: CanvasLot[];
  tags: VisualTag[];
}

/** Minimum committed quad area in screen pixels. */
export const MIN_QUAD_AREA_PX = 4;

export class LabelSession {
  readonly imageId: string;
  readonly imagePath: string;
  readonly width: number;
  readonly height: number;

  mode: Mode = "label";
  lots: CanvasLot[] = [];
  tags: VisualTag[] = [];
  currentIndex = 0;
  revision: number;
  draft: Vec2[] = [];
  draftError: string | null = null;
  overlays: Map<string, OverlayState> = new Map();

  private baseline: string;
  private undoStack: Snapshot[] = [];

  constructor(imageId: string, revision: number, annotation: AnnotationDoc) {
    this.imageId = imageId;
    this.imagePath = annotation.image;
    this.width = annotation.width;
    this.height = annotation.height;
    this.revision = revision;
    this.lots = annotation.lots.map((lot) => ({
      id: lot.id,
      quad: (lot.quad ?? rectToQuad(lot.rect!)).map((p) => [p[0], p[1]] as Vec2),
      occupied: lot.occupied,
    }));
    this.tags = annotation.tags.filter(isVisualTag);
    this.baseline = JSON.stringify(this.toAnnotation());
  }

  get currentLot(): CanvasLot | null {
    return this.lots[this.currentIndex] ?? null;
  }

  /** True iff local state diverges from the last fetched revision. */
  get unsavedChanges(): boolean {
    return JSON.stringify(this.toAnnotation()) !== this.baseline;
  }

  get labeledCount(): number {
    return this.lots.filter((lot) => lot.occupied !== null).length;
  }

  /** Labeled fraction in [0, 1]; 1 when there are no lots. */
  get progress(): number {
    return this.lots.length === 0 ? 1 : this.labeledCount / this.lots.length;
  }

  // ---- drawing ----------------------------------------------------------

  /** Add one click to the draft; on the 4th click validate and commit.
   * Returns the committed lot, or null while drafting / on rejection. */
  addDraftPoint(x: number, y: number): CanvasLot | null {
    this.draftError = null;
    this.draft.push([x, y]);
    if (this.draft.length < 4) return null;

    const quad = canonicalQuad(this.draft, MIN_QUAD_AREA_PX);
    if (quad === null) {
      // keep the draft on screen so the offending click can be corrected
      this.draftError = "those 4 points do not form a convex quadrangle";
      return null;
    }
    if (!withinBounds(quad, this.width, this.height)) {
      this.draftError = "quadrangle extends outside the image";
      return null;
    }
    this.pushUndo();
    const lot: CanvasLot = { id: this.nextLotId(), quad, occupied: null };
    this.lots.push(lot);
    this.currentIndex = this.lots.length - 1;
    this.draft = [];
    return lot;
  }

  /** Drop the last draft click (correcting a misclick). */
  retractDraftPoint(): void {
    this.draft.pop();
    this.draftError = null;
  }

  eraseLot(index: number): void {
    if (index < 0 || index >= this.lots.length) return;
    this.pushUndo();
    this.lots.splice(index, 1);
    this.currentIndex = Math.min(this.currentIndex, Math.max(0, this.lots.length - 1));
  }

  // ---- labeling ---------------------------------------------------------

  /** O = occupied, F = free, U = unlabeled; advances to the next lot. */
  labelCurrent(key: "O" | "F" | "U"): void {
    const lot = this.currentLot;
    if (lot === null) return;
    this.pushUndo();
    lot.occupied = key === "O" ? true : key === "F" ? false : null;
    this.next();
  }

  next(): void {
    if (this.lots.length > 0) this.currentIndex = (this.currentIndex + 1) % this.lots.length;
  }

  previous(): void {
    if (this.lots.length > 0) {
      this.currentIndex = (this.currentIndex + this.lots.length - 1) % this.lots.length;
    }
  }

  toggleTag(tag: VisualTag): void {
    this.pushUndo();
    this.tags = this.tags.includes(tag)
      ? this.tags.filter((t) => t !== tag)
      : [...this.tags, tag];
  }

  // ---- undo -------------------------------------------------------------

  /** Unlimited within the session. */
  undo(): void {
    const snapshot = this.undoStack.pop();
    if (snapshot === undefined) return;
    this.lots = snapshot.lots;
    this.tags = snapshot.tags;
    this.currentIndex = Math.min(this.currentIndex, Math.max(0, this.lots.length - 1));
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  // ---- preview overlays -------------------------------------------------

  applyPreview(results: PreviewResult[]): void {
    this.overlays = new Map(
      results.map((r) => [r.lot_id, { decided: r.decided, ratio: r.ratio }]),
    );
  }

  clearPreview(): void {
    this.overlays = new Map();
  }

  // ---- persistence ------------------------------------------------------

  /** Serialize to the document shape the server's strict parser accepts. */
  toAnnotation(): AnnotationDoc {
    return {
      image: this.imagePath,
      width: this.width,
      height: this.height,
      tags: [...this.tags].sort(),
      lots: [...this.lots]
        .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
        .map((lot): LotDoc => ({
          id: lot.id,
          quad: lot.quad.map((p) => [p[0], p[1]] as Vec2),
          occupied: lot.occupied,
        })),
    };
  }

  /** Record a successful save: the server state now matches local state. */
  markSaved(newRevision: number): void {
    this.revision = newRevision;
    this.baseline = JSON.stringify(this.toAnnotation());
  }

  private pushUndo(): void {
    this.undoStack.push({
      lots: this.lots.map((lot) => ({ ...lot, quad: lot.quad.map((p) => [...p] as Vec2) })),
      tags: [...this.tags],
    });
  }

  private nextLotId(): string {
    const existing = new Set(this.lots.map((lot) => lot.id));
    let n = this.lots.length;
    while (existing.has(`lot_${n}`)) n += 1;
    return `lot_${n}`;
  }
}

function rectToQuad(rect: [Vec2, Vec2]): Vec2[] {
  const [[x0, y0], [x1, y1]] = rect;
  return [
    [x0, y0],
    [x1, y0],
    [x1, y1],
    [x0, y1],
  ];
}

function isVisualTag(tag: string): tag is VisualTag {
  return (VISUAL_TAGS as readonly string[]).includes(tag);
}
