/** WebGL2 viewport: solid current mesh, optional pre-op wireframe overlay,
 * centerline polylines, pick markers and the stent-axis preview. Flat
 * shading comes from screen-space derivatives, so vertex position updates
 * are a single buffer upload. */
import { OrbitCamera } from "./camera.js";
const MESH_VS = `#version 300 es
uniform mat4 uMvp;
in vec3 aPos;
out vec3 vPos;
void main() {
  vPos = aPos;
  gl_Position = uMvp * vec4(aPos, 1.0);
}`;
const MESH_FS = `#version 300 es
precision highp float;
uniform vec3 uColor;
uniform float uAlpha;
in vec3 vPos;
out vec4 outColor;
void main() {
  vec3 n = normalize(cross(dFdx(vPos), dFdy(vPos)));
  float diffuse = abs(n.z) * 0.75 + 0.25;
  outColor = vec4(uColor * diffuse, uAlpha);
}`;
const LINE_VS = `#version 300 es
uniform mat4 uMvp;
in vec3 aPos;
void main() {
  gl_Position = uMvp * vec4(aPos, 1.0);
  gl_PointSize = 9.0;
}`;
const LINE_FS = `#version 300 es
precision highp float;
uniform vec3 uColor;
out vec4 outColor;
void main() { outColor = vec4(uColor, 1.0); }`;
function compile(gl, vsSrc, fsSrc) {
    const mk = (type, src) => {
        const sh = gl.createShader(type);
        gl.shaderSource(sh, src);
        gl.compileShader(sh);
        if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
            throw new Error(gl.getShaderInfoLog(sh) ?? "shader compile failed");
        }
        return sh;
    };
    const prog = gl.createProgram();
    gl.attachShader(prog, mk(gl.VERTEX_SHADER, vsSrc));
    gl.attachShader(prog, mk(gl.FRAGMENT_SHADER, fsSrc));
    gl.linkProgram(prog);
    if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
        throw new Error(gl.getProgramInfoLog(prog) ?? "program link failed");
    }
    return prog;
}
function edgeIndices(faces) {
    const seen = new Set();
    const out = [];
    const n = faces.length / 3;
    for (let f = 0; f < n; f++) {
        for (let e = 0; e < 3; e++) {
            const a = faces[3 * f + e];
            const b = faces[3 * f + ((e + 1) % 3)];
            const key = a < b ? a * 0x100000000 + b : b * 0x100000000 + a;
            if (!seen.has(key)) {
                seen.add(key);
                out.push(a, b);
            }
        }
    }
    return new Uint32Array(out);
}
export class Viewport {
    constructor(canvas) {
        this.canvas = canvas;
        this.camera = new OrbitCamera();
        this.showPreOp = true;
        this.showCenterline = true;
        this.meshVbo = null;
        this.meshIbo = null;
        this.meshIndexCount = 0;
        this.preOpVbo = null;
        this.preOpEbo = null;
        this.preOpEdgeCount = 0;
        this.lineSets = new Map();
        this.uploadedGeneration = -1;
        this.mesh = null;
        const gl = canvas.getContext("webgl2");
        if (!gl)
            throw new Error("WebGL2 is required");
        this.gl = gl;
        this.meshProg = compile(gl, MESH_VS, MESH_FS);
        this.lineProg = compile(gl, LINE_VS, LINE_FS);
        gl.enable(gl.DEPTH_TEST);
    }
    setMesh(mesh) {
        const gl = this.gl;
        this.mesh = mesh;
        this.meshVbo = this.meshVbo ?? gl.createBuffer();
        gl.bindBuffer(gl.ARRAY_BUFFER, this.meshVbo);
        gl.bufferData(gl.ARRAY_BUFFER, mesh.positions, gl.DYNAMIC_DRAW);
        this.meshIbo = this.meshIbo ?? gl.createBuffer();
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.meshIbo);
        gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, mesh.faces, gl.STATIC_DRAW);
        this.meshIndexCount = mesh.faces.length;
        this.uploadedGeneration = mesh.generation;
        // frozen pre-op copy for the wireframe overlay
        this.preOpVbo = this.preOpVbo ?? gl.createBuffer();
        gl.bindBuffer(gl.ARRAY_BUFFER, this.preOpVbo);
        gl.bufferData(gl.ARRAY_BUFFER, mesh.positions.slice(), gl.STATIC_DRAW);
        this.preOpEbo = this.preOpEbo ?? gl.createBuffer();
        const edges = edgeIndices(mesh.faces);
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.preOpEbo);
        gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, edges, gl.STATIC_DRAW);
        this.preOpEdgeCount = edges.length;
        const c = mesh.centroid();
        this.camera.target = c;
        this.camera.distance = mesh.radiusAbout(c) * 2.6;
    }
    setLines(name, points, color, mode = "strip") {
        const gl = this.gl;
        const flat = [];
        for (const poly of points) {
            if (mode === "strip") {
                for (let i = 1; i < poly.length; i++) {
                    flat.push(...poly[i - 1], ...poly[i]);
                }
            }
            else {
                for (const p of poly)
                    flat.push(...p);
            }
        }
        const old = this.lineSets.get(name);
        const vbo = old?.vbo ?? gl.createBuffer();
        gl.bindBuffer(gl.ARRAY_BUFFER, vbo);
        gl.bufferData(gl.ARRAY_BUFFER, new Float32Array(flat), gl.STATIC_DRAW);
        this.lineSets.set(name, {
            vbo, count: flat.length / 3, color,
            mode: mode === "strip" ? "lines" : mode,
        });
    }
    dropLines(name) {
        this.lineSets.delete(name);
    }
    draw() {
        const gl = this.gl;
        const mesh = this.mesh;
        const w = this.canvas.width;
        const h = this.canvas.height;
        gl.viewport(0, 0, w, h);
        gl.clearColor(0.055, 0.07, 0.09, 1);
        gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
        if (!mesh || !this.meshVbo)
            return;
        if (mesh.generation !== this.uploadedGeneration) {
            gl.bindBuffer(gl.ARRAY_BUFFER, this.meshVbo);
            gl.bufferSubData(gl.ARRAY_BUFFER, 0, mesh.positions);
            this.uploadedGeneration = mesh.generation;
        }
        const mvp = this.camera.viewProjection(w / h, 0.1, this.camera.distance * 10 + 100);
        gl.useProgram(this.meshProg);
        gl.uniformMatrix4fv(gl.getUniformLocation(this.meshProg, "uMvp"), false, mvp);
        gl.uniform3f(gl.getUniformLocation(this.meshProg, "uColor"), 0.42, 0.62, 0.86);
        gl.uniform1f(gl.getUniformLocation(this.meshProg, "uAlpha"), 1.0);
        const posLoc = gl.getAttribLocation(this.meshProg, "aPos");
        gl.bindBuffer(gl.ARRAY_BUFFER, this.meshVbo);
        gl.enableVertexAttribArray(posLoc);
        gl.vertexAttribPointer(posLoc, 3, gl.FLOAT, false, 0, 0);
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.meshIbo);
        gl.drawElements(gl.TRIANGLES, this.meshIndexCount, gl.UNSIGNED_INT, 0);
        gl.useProgram(this.lineProg);
        gl.uniformMatrix4fv(gl.getUniformLocation(this.lineProg, "uMvp"), false, mvp);
        const lineLoc = gl.getAttribLocation(this.lineProg, "aPos");
        gl.enableVertexAttribArray(lineLoc);
        if (this.showPreOp && this.preOpVbo) {
            gl.uniform3f(gl.getUniformLocation(this.lineProg, "uColor"), 0.78, 0.25, 0.25);
            gl.bindBuffer(gl.ARRAY_BUFFER, this.preOpVbo);
            gl.vertexAttribPointer(lineLoc, 3, gl.FLOAT, false, 0, 0);
            gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.preOpEbo);
            gl.drawElements(gl.LINES, this.preOpEdgeCount, gl.UNSIGNED_INT, 0);
        }
        for (const [name, set] of this.lineSets) {
            if (!this.showCenterline && name === "centerline")
                continue;
            gl.uniform3f(gl.getUniformLocation(this.lineProg, "uColor"), ...set.color);
            gl.bindBuffer(gl.ARRAY_BUFFER, set.vbo);
            gl.vertexAttribPointer(lineLoc, 3, gl.FLOAT, false, 0, 0);
            gl.drawArrays(set.mode === "points" ? gl.POINTS : gl.LINES, 0, set.count);
        }
    }
}
