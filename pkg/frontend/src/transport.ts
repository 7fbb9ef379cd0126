/** Transports carry bridge requests; the UI never computes model values itself. */

import type {
  BridgeRequest,
  BridgeResponse,
  DecompositionPayload,
  LoadModelPayload,
  OverviewPayload,
  RecordedExchange,
  ScalePayload,
  SetInputPayload,
  Scope,
  TopologyEntry,
  TracePayload,
  WiringPayload,
} from "./types.js";

export interface BridgeTransport {
  send(request: BridgeRequest): Promise<BridgeResponse>;
}

export class BridgeError extends Error {
  readonly code: string;
  constructor(code: string, message: string) {
    super(message);
    this.code = code;
  }
}

/** POSTs each request to an embedding host (see scripts/serve_ui.py). */
export class HttpTransport implements BridgeTransport {
  constructor(private readonly url: string = "/bridge") {}

  async send(request: BridgeRequest): Promise<BridgeResponse> {
    const response = await fetch(this.url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    return (await response.json()) as BridgeResponse;
  }
}

function deepEqual(a: unknown, b: unknown): boolean {
  if (Object.is(a, b)) return true;
  if (typeof a !== typeof b || a === null || b === null) return false;
  if (Array.isArray(a)) {
    if (!Array.isArray(b) || a.length !== b.length) return false;
    return a.every((v, i) => deepEqual(v, b[i]));
  }
  if (typeof a === "object") {
    const ka = Object.keys(a as object).filter((k) => (a as Record<string, unknown>)[k] !== undefined);
    const kb = Object.keys(b as object).filter((k) => (b as Record<string, unknown>)[k] !== undefined);
    if (ka.length !== kb.length) return false;
    return ka.every((k) => deepEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]));
  }
  return false;
}

/** Replays recorded fixture traffic; any unrecorded request is an error. */
export class ReplayTransport implements BridgeTransport {
  private readonly pending: RecordedExchange[];

  constructor(exchanges: RecordedExchange[]) {
    this.pending = exchanges.slice();
  }

  send(request: BridgeRequest): Promise<BridgeResponse> {
    const index = this.pending.findIndex((e) => deepEqual(e.request, normalize(request)));
    if (index < 0) {
      return Promise.reject(new Error(`no recorded response for request: ${JSON.stringify(request)}`));
    }
    const [exchange] = this.pending.splice(index, 1);
    return Promise.resolve(exchange.response);
  }
}

function normalize(request: BridgeRequest): BridgeRequest {
  return request.args === undefined ? { op: request.op } : request;
}

/** Wraps another transport and keeps every exchange for inspection in tests. */
export class RecordingTransport implements BridgeTransport {
  readonly exchanges: RecordedExchange[] = [];

  constructor(private readonly inner: BridgeTransport) {}

  async send(request: BridgeRequest): Promise<BridgeResponse> {
    const response = await this.inner.send(request);
    this.exchanges.push({ request, response });
    return response;
  }
}

/** Typed request helpers; sends are serialized per session so responses stay ordered. */
export class BridgeClient {
  private chain: Promise<unknown> = Promise.resolve();

  constructor(private readonly transport: BridgeTransport) {}

  private call<T>(op: string, args?: Record<string, unknown>): Promise<T> {
    const run = async (): Promise<T> => {
      const request: BridgeRequest = args === undefined ? { op } : { op, args };
      const response = await this.transport.send(request);
      if (response.err) throw new BridgeError(response.err.code, response.err.message);
      return response.ok as T;
    };
    const next = this.chain.then(run, run);
    this.chain = next.catch(() => undefined);
    return next;
  }

  loadModel(manifest: unknown, weightsB64: string): Promise<LoadModelPayload> {
    return this.call("load_model", { manifest, weightsB64 });
  }

  setInput(shape: number[], values: number[][][]): Promise<SetInputPayload> {
    return this.call("set_input", { tensor: { shape, values } });
  }

  getOverview(scope: Scope = "layer"): Promise<OverviewPayload> {
    return this.call("get_overview", { scope });
  }

  getConvDecomposition(layer: string, outChannel: number): Promise<DecompositionPayload> {
    return this.call("get_conv_decomposition", { layer, outChannel });
  }

  getFlattenWiring(classIndex: number): Promise<WiringPayload> {
    return this.call("get_flatten_wiring", { classIndex });
  }

  getWindowTrace(
    layer: string,
    outChannel: number,
    row: number,
    col: number,
    inChannel?: number,
  ): Promise<TracePayload> {
    const args: Record<string, unknown> = { layer, outChannel, row, col };
    if (inChannel !== undefined) args.inChannel = inChannel;
    return this.call("get_window_trace", args);
  }

  getColorScales(scope: Scope): Promise<ScalePayload[]> {
    return this.call("get_color_scales", { scope });
  }

  getTopology(): Promise<TopologyEntry[]> {
    return this.call("get_topology");
  }
}
