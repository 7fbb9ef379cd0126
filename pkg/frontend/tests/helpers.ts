import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ExplainerApp } from "../src/app.js";
import { RecordingTransport, ReplayTransport } from "../src/transport.js";
import type { RecordedExchange } from "../src/types.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

export function fixtureText(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

export interface ModelFixture {
  manifest: Record<string, unknown>;
  weightsB64: string;
}

export interface InputFixture {
  id: string;
  shape: [number, number, number];
  pixels: number[][][];
}

export interface DumpFixture {
  modelName: string;
  inputDigest: string;
  classProbabilities: Record<string, number>;
  perLayer: {
    layerName: string;
    kind: string;
    shape: [number, number, number];
    colorScaleMaxAbs: number;
    values: number[][][];
  }[];
  convDecompositions: {
    layerName: string;
    outChannel: number;
    bias: number;
    kernels: number[][][];
    intermediates: number[][][];
    reconstructed: number[][];
  }[];
  flattenWirings: {
    classIndex: number;
    bias: number;
    edges: { source: [number, number, number]; flatIndex: number; sourceValue: number; weight: number; contribution: number }[];
  }[];
}

export interface StartedApp {
  app: ExplainerApp;
  recorder: RecordingTransport;
  input: InputFixture;
  dump: DumpFixture;
}

/** App wired to replayed fixture traffic, with the recorder interposed so
 * tests can inspect every payload that crossed the bridge. */
export async function startApp(): Promise<StartedApp> {
  const traffic = fixture<RecordedExchange[]>("traffic.json");
  const model = fixture<ModelFixture>("model.json");
  const input = fixture<InputFixture>("input.json");
  const dump = fixture<DumpFixture>("dump.json");
  const recorder = new RecordingTransport(new ReplayTransport(traffic));
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new ExplainerApp(document, root, recorder);
  await app.start(model.manifest, model.weightsB64, [{ id: input.id, pixels: input.pixels }]);
  await app.setInput(input.id, input.pixels);
  return { app, recorder, input, dump };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
