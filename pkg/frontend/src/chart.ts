/** MIS-diameter profile chart. Layout is computed as plain data so it can be
 * tested; drawing is a thin canvas pass over the layout. */

import { ProfilePoint } from "./protocol.js";

export interface ChartLayout {
  /** polyline in pixel space, one point per profile sample */
  line: [number, number][];
  /** dashed reference line y for the prescribed diameter, if shown */
  referenceY: number | null;
  yMin: number;
  yMax: number;
  placeholder: string | null;
}

export function layoutChart(
  profile: ProfilePoint[],
  prescribedDiameter: number | null,
  width: number,
  height: number,
  pad = 28,
): ChartLayout {
  if (!profile.length) {
    return { line: [], referenceY: null, yMin: 0, yMax: 1, placeholder: "no profile yet" };
  }
  const xs = profile.map((p) => p.arc_length);
  const ys = profile.map((p) => p.mis_diameter);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (prescribedDiameter !== null && prescribedDiameter > 0) {
    yMin = Math.min(yMin, prescribedDiameter);
    yMax = Math.max(yMax, prescribedDiameter);
  }
  const ySpan = Math.max(yMax - yMin, 1e-6);
  yMin -= 0.05 * ySpan;
  yMax += 0.05 * ySpan;
  const toX = (x: number) =>
    pad + ((x - xMin) / Math.max(xMax - xMin, 1e-9)) * (width - 2 * pad);
  const toY = (y: number) => height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);
  return {
    line: profile.map((p) => [toX(p.arc_length), toY(p.mis_diameter)] as [number, number]),
    referenceY: prescribedDiameter !== null && prescribedDiameter > 0
      ? toY(prescribedDiameter) : null,
    yMin,
    yMax,
    placeholder: null,
  };
}

export function drawChart(
  ctx: CanvasRenderingContext2D,
  profile: ProfilePoint[],
  prescribedDiameter: number | null,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);
  const layout = layoutChart(profile, prescribedDiameter, width, height);
  if (layout.placeholder) {
    ctx.fillStyle = "#8b98a9";
    ctx.font = "13px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(layout.placeholder, width / 2, height / 2);
    return;
  }
  ctx.strokeStyle = "#31405a";
  ctx.strokeRect(24, 8, width - 32, height - 36);
  if (layout.referenceY !== null) {
    ctx.strokeStyle = "#d9b64a";
    ctx.setLineDash([6, 5]);
    ctx.beginPath();
    ctx.moveTo(24, layout.referenceY);
    ctx.lineTo(width - 8, layout.referenceY);
    ctx.stroke();
    ctx.setLineDash([]);
  }
  ctx.strokeStyle = "#5dc0f0";
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  layout.line.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#8b98a9";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`${layout.yMax.toFixed(1)} mm`, 2, 14);
  ctx.fillText(`${layout.yMin.toFixed(1)}`, 2, height - 26);
}
