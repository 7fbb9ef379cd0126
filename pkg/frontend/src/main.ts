/** Browser entry: fetch the model bundle and sample images as static assets,
 * then drive the inference core through the HTTP-embedded bridge. */

import { ExplainerApp } from "./app.js";
import { HttpTransport } from "./transport.js";
import type { SampleImage } from "./input_picker.js";

async function fetchJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) throw new Error(`${url}: HTTP ${response.status}`);
  return (await response.json()) as T;
}

async function fetchWeightsB64(url: string): Promise<string> {
  const response = await fetch(url);
  if (!response.ok) throw new Error(`${url}: HTTP ${response.status}`);
  const bytes = new Uint8Array(await response.arrayBuffer());
  let binary = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const manifest = await fetchJson<Record<string, unknown>>("assets/model/manifest.json");
  const weightsB64 = await fetchWeightsB64("assets/model/weights.bin");
  const samples = await fetchJson<SampleImage[]>("assets/samples.json").catch(() => [] as SampleImage[]);

  const app = new ExplainerApp(document, root, new HttpTransport("/bridge"));
  await app.start(manifest, weightsB64, samples);
  if (samples.length > 0) {
    await app.setInput(samples[0].id, samples[0].pixels);
  }

  const scopePicker = document.getElementById("scope");
  scopePicker?.addEventListener("change", () => {
    const value = (scopePicker as HTMLSelectElement).value as "layer" | "unit" | "module" | "global";
    void app.setScope(value);
  });
}

boot().catch((error) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `failed to start: ${(error as Error).message}`;
});
