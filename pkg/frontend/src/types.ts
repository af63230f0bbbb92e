// Mirror of the /v1 wire contract plus the view-layer adaptation.
//
// Every scalar the console displays is carried with the exact byte
// slice from the service response next to the parsed number. DOM text
// always comes from `text`; `num` exists only for display scaling
// (bar widths, polyline coordinates).

export interface NumText {
  text: string;
  num: number;
}

// Acquired and observed values may be categorical strings.
export interface WireText {
  text: string;
  num: number | null;
}

export interface FeatureSpec {
  id: string;
  desc: string;
  type: "categorical" | "continuous";
  choices: string[];
  range: [number, number];
  cost: number;
}

export interface SchemaInfo {
  name: string;
  context: string;
  target_ids: string[];
  n_rows: number;
  features: FeatureSpec[];
}

export interface CatBar {
  choice: string;
  p: NumText;
}

export interface CategoricalView {
  type: "categorical";
  argmax: string;
  probs: CatBar[];
}

export interface ContinuousView {
  type: "continuous";
  meanRaw: NumText;
  curveX: NumText[];
  curveDensity: NumText[];
}

export type PredictionView = CategoricalView | ContinuousView;

export interface SuggestionView {
  stop: boolean;
  featureId: string | null;
  score: NumText | null;
  mi: NumText | null;
  cost: NumText | null;
}

export interface AcquiredRow {
  featureId: string;
  value: WireText;
  cost: NumText;
  step: NumText;
}

export interface SessionView {
  sessionId: string;
  dataset: string;
  target: string;
  phase: string;
  budgetInitial: NumText;
  budgetRemaining: NumText;
  spent: NumText;
  observed: Array<{ featureId: string; value: WireText }>;
  acquired: AcquiredRow[];
  suggestion: SuggestionView;
  prediction: PredictionView;
}
