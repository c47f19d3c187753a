/** Orbit camera and the small matrix/vector kit the viewport needs. */

export type Vec3 = [number, number, number];

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

export class OrbitCamera {
  target: Vec3 = [0, 0, 0];
  distance = 60;
  yaw = 0.6;
  pitch = 0.4;
  fovY = Math.PI / 4;

  eye(): Vec3 {
    const cp = Math.cos(this.pitch), sp = Math.sin(this.pitch);
    const cy = Math.cos(this.yaw), sy = Math.sin(this.yaw);
    return [
      this.target[0] + this.distance * cp * cy,
      this.target[1] + this.distance * sp,
      this.target[2] + this.distance * cp * sy,
    ];
  }

  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const forward = normalize(sub(this.target, this.eye()));
    const right = normalize(cross(forward, [0, 1, 0]));
    const up = cross(right, forward);
    return { forward, right, up };
  }

  /** Ray through a screen pixel: origin at the eye, direction through the
   * pixel on the image plane. */
  pickRay(px: number, py: number, width: number, height: number): { origin: Vec3; dir: Vec3 } {
    const ndcX = (px / width) * 2 - 1;
    const ndcY = 1 - (py / height) * 2;
    const { forward, right, up } = this.basis();
    const tanY = Math.tan(this.fovY / 2);
    const tanX = tanY * (width / height);
    const dir = normalize([
      forward[0] + ndcX * tanX * right[0] + ndcY * tanY * up[0],
      forward[1] + ndcX * tanX * right[1] + ndcY * tanY * up[1],
      forward[2] + ndcX * tanX * right[2] + ndcY * tanY * up[2],
    ]);
    return { origin: this.eye(), dir };
  }

  /** World point to pixel coordinates (null when behind the eye). */
  project(p: Vec3, width: number, height: number): [number, number] | null {
    const { forward, right, up } = this.basis();
    const eye = this.eye();
    const v = sub(p, eye);
    const z = dot(v, forward);
    if (z <= 1e-9) return null;
    const tanY = Math.tan(this.fovY / 2);
    const tanX = tanY * (width / height);
    const ndcX = dot(v, right) / (z * tanX);
    const ndcY = dot(v, up) / (z * tanY);
    return [((ndcX + 1) / 2) * width, ((1 - ndcY) / 2) * height];
  }

  viewProjection(aspect: number, near: number, far: number): Float32Array {
    const { forward, right, up } = this.basis();
    const eye = this.eye();
    // column-major view matrix
    const view = [
      right[0], up[0], -forward[0], 0,
      right[1], up[1], -forward[1], 0,
      right[2], up[2], -forward[2], 0,
      -dot(right, eye), -dot(up, eye), dot(forward, eye), 1,
    ];
    const f = 1 / Math.tan(this.fovY / 2);
    const nf = 1 / (near - far);
    const proj = [
      f / aspect, 0, 0, 0,
      0, f, 0, 0,
      0, 0, (far + near) * nf, -1,
      0, 0, 2 * far * near * nf, 0,
    ];
    const out = new Float32Array(16);
    for (let c = 0; c < 4; c++) {
      for (let r = 0; r < 4; r++) {
        let s = 0;
        for (let k = 0; k < 4; k++) s += proj[k * 4 + r] * view[c * 4 + k];
        out[c * 4 + r] = s;
      }
    }
    return out;
  }
}
