/** Bridge message schema (bridgeVersion 1) and payload shapes. */

export interface BridgeRequest {
  op: string;
  args?: Record<string, unknown>;
}

export interface BridgeErrBody {
  code: string;
  message: string;
}

export interface BridgeResponse {
  bridgeVersion: number;
  ok?: unknown;
  err?: BridgeErrBody;
}

export interface RecordedExchange {
  request: BridgeRequest;
  response: BridgeResponse;
}

export interface LoadModelPayload {
  modelName: string;
  inputShape: [number, number, number];
  layers: { name: string; kind: LayerKind }[];
  classLabels: string[];
}

export type LayerKind = "Conv" | "ReLU" | "MaxPool" | "Flatten" | "Dense";

export interface SetInputPayload {
  inputDigest: string;
  classProbabilities: Record<string, number>;
}

export interface LayerEntry {
  layerName: string;
  kind: LayerKind;
  shape: [number, number, number];
  colorScaleMaxAbs: number;
  values?: number[][][];
  valuesB64?: string;
}

export interface OverviewPayload {
  modelName: string;
  inputDigest: string;
  classProbabilities: Record<string, number>;
  perLayer: LayerEntry[];
}

export interface DecompositionPayload {
  layerName: string;
  outChannel: number;
  bias: number;
  kernels: number[][][];
  intermediates: number[][][];
  reconstructed: number[][];
}

export interface WiringEdge {
  source: [number, number, number];
  flatIndex: number;
  sourceValue: number;
  weight: number;
  contribution: number;
}

export interface WiringPayload {
  classIndex: number;
  bias: number;
  edges: WiringEdge[];
}

export interface TracePayload {
  kind: LayerKind;
  window: { originRow: number; originCol: number; size: number; values: number[][] };
  kernel?: number[][];
  products?: number[][];
  result: number;
}

export interface ScalePayload {
  scope: string;
  scopeKey: string;
  maxAbs: number;
}

export interface TopologyEntry {
  layerName: string;
  connectivity: "full" | "one_to_one" | "flatten";
  inNeurons: number;
  outNeurons: number;
  edgeCount: number;
}

export type Scope = "layer" | "unit" | "module" | "global";
