/** Input selection: bundled dataset samples or a user upload. Uploads must
 * decode to exactly the model's input size; anything else is rejected inline
 * and the current state is preserved. */

export interface SampleImage {
  id: string;
  pixels: number[][][]; // [h][w][3] floats in [0, 1]
}

export interface PickerHandlers {
  onInputChosen(id: string, pixels: number[][][]): Promise<void> | void;
}

export class InputPicker {
  readonly element: HTMLElement;
  private readonly errorBox: HTMLElement;

  constructor(
    doc: Document,
    private readonly samples: SampleImage[],
    private readonly inputShape: [number, number, number],
    private readonly handlers: PickerHandlers,
  ) {
    this.element = doc.createElement("div");
    this.element.className = "input-picker";
    for (const sample of samples) {
      const button = doc.createElement("button");
      button.className = "sample-choice";
      button.setAttribute("data-sample", sample.id);
      button.textContent = sample.id;
      button.addEventListener("click", () => void this.chooseSample(sample.id));
      this.element.appendChild(button);
    }
    const upload = doc.createElement("input");
    upload.setAttribute("type", "file");
    upload.className = "upload-input";
    upload.addEventListener("change", () => {
      const file = (upload as HTMLInputElement).files?.[0];
      if (file) void this.uploadFile(file);
    });
    this.element.appendChild(upload);
    this.errorBox = doc.createElement("div");
    this.errorBox.className = "picker-error";
    this.element.appendChild(this.errorBox);
  }

  async chooseSample(id: string): Promise<void> {
    const sample = this.samples.find((s) => s.id === id);
    if (!sample) {
      this.showError(`unknown sample ${id}`);
      return;
    }
    await this.accept(id, sample.pixels);
  }

  /** Entry point for decoded uploads (and for tests, which skip file decoding). */
  async acceptPixels(id: string, pixels: number[][][]): Promise<void> {
    const [th, tw] = this.inputShape;
    const h = pixels.length;
    const w = pixels[0]?.length ?? 0;
    if (h !== th || w !== tw) {
      this.showError(`image is ${h}x${w}, model expects ${th}x${tw}`);
      return;
    }
    await this.accept(id, pixels);
  }

  private async accept(id: string, pixels: number[][][]): Promise<void> {
    this.errorBox.textContent = "";
    await this.handlers.onInputChosen(id, pixels);
  }

  private async uploadFile(file: Blob & { name?: string }): Promise<void> {
    try {
      const pixels = await decodeImage(file);
      await this.acceptPixels(file.name ?? "upload", pixels);
    } catch (error) {
      this.showError(`undecodable image: ${(error as Error).message}`);
    }
  }

  showError(message: string): void {
    this.errorBox.textContent = message;
  }

  get errorText(): string {
    return this.errorBox.textContent ?? "";
  }
}

/** Browser-only PNG/JPEG decoding via ImageBitmap + canvas. */
async function decodeImage(file: Blob): Promise<number[][][]> {
  if (typeof createImageBitmap !== "function") {
    throw new Error("image decoding unavailable in this environment");
  }
  const bitmap = await createImageBitmap(file);
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  ctx.drawImage(bitmap, 0, 0);
  const data = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  const pixels: number[][][] = [];
  for (let r = 0; r < bitmap.height; r++) {
    const row: number[][] = [];
    for (let q = 0; q < bitmap.width; q++) {
      const base = (r * bitmap.width + q) * 4;
      row.push([data[base] / 255, data[base + 1] / 255, data[base + 2] / 255]);
    }
    pixels.push(row);
  }
  return pixels;
}
