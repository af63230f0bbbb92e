// Display scaling. This is the only module on the prediction render
// path allowed to do arithmetic: mapping service-provided numbers onto
// pixel coordinates and percentage widths. It never invents a value
// that gets rendered as text.

export function barWidthPercent(p: number): string {
  const clamped = Math.min(Math.max(p, 0), 1);
  return `${(clamped * 100).toFixed(2)}%`;
}

export function polylinePoints(
  xs: number[],
  ys: number[],
  width: number,
  height: number,
  pad: number,
): string {
  if (xs.length === 0 || xs.length !== ys.length) {
    return "";
  }
  const xLo = xs[0];
  const xHi = xs[xs.length - 1];
  const xSpan = xHi - xLo || 1;
  const yHi = Math.max(...ys, 0) || 1;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const px = pad + ((xs[i] - xLo) / xSpan) * innerW;
    const py = height - pad - (Math.min(Math.max(ys[i], 0), yHi) / yHi) * innerH;
    pts.push(`${px.toFixed(2)},${py.toFixed(2)}`);
  }
  return pts.join(" ");
}

export function first<T>(arr: T[]): T {
  return arr[0];
}

export function last<T>(arr: T[]): T {
  return arr[arr.length - 1];
}
