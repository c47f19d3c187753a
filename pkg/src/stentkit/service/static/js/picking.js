/** Centerline picking: snap a screen click to the nearest rendered
 * centerline point within a pixel threshold, reporting (path id, arc
 * length). */
export function arcLengths(points) {
    const arcs = [0];
    for (let i = 1; i < points.length; i++) {
        const dx = points[i][0] - points[i - 1][0];
        const dy = points[i][1] - points[i - 1][1];
        const dz = points[i][2] - points[i - 1][2];
        arcs.push(arcs[i - 1] + Math.sqrt(dx * dx + dy * dy + dz * dz));
    }
    return arcs;
}
export function toPickable(id, rawPoints) {
    const points = rawPoints.map((p) => [p[0], p[1], p[2]]);
    return { id, points, arcs: arcLengths(points) };
}
export const PICK_PIXEL_THRESHOLD = 12;
/** Nearest centerline point to the click within the pixel threshold, or
 * null (a miss is a no-op for the caller). */
export function pickCenterlinePoint(px, py, width, height, camera, paths, threshold = PICK_PIXEL_THRESHOLD) {
    let best = null;
    for (const path of paths) {
        for (let i = 0; i < path.points.length; i++) {
            const screen = camera.project(path.points[i], width, height);
            if (!screen)
                continue;
            const dx = screen[0] - px;
            const dy = screen[1] - py;
            const d2 = dx * dx + dy * dy;
            if (d2 <= threshold * threshold && (best === null || d2 < best.d2)) {
                best = { d2, anchor: { path: path.id, arc: path.arcs[i] } };
            }
        }
    }
    return best ? best.anchor : null;
}
