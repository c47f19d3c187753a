/** Client-side mesh store. The only code path that ever writes vertex data
 * is applyDelta; every shape change originates from a server message. */
export class DeltaRangeError extends Error {
    constructor(index, count) {
        super(`delta references vertex ${index} beyond the ${count} transmitted`);
    }
}
export class MeshBuffer {
    constructor(positions, faces) {
        /** bumped on every applied change so the renderer knows to re-upload */
        this.generation = 0;
        this.positions = positions.slice();
        this.faces = faces;
        this.vertexCount = positions.length / 3;
    }
    /** Patch positions in place. Throws DeltaRangeError on indices that were
     * never transmitted; the caller should then re-request mesh_full. */
    applyDelta(delta) {
        const n = this.vertexCount;
        for (let i = 0; i < delta.indices.length; i++) {
            if (delta.indices[i] >= n) {
                throw new DeltaRangeError(delta.indices[i], n);
            }
        }
        for (let i = 0; i < delta.indices.length; i++) {
            const v = delta.indices[i] * 3;
            this.positions[v] = delta.positions[3 * i];
            this.positions[v + 1] = delta.positions[3 * i + 1];
            this.positions[v + 2] = delta.positions[3 * i + 2];
        }
        if (delta.indices.length) {
            this.generation++;
        }
    }
    centroid() {
        let x = 0, y = 0, z = 0;
        const n = this.vertexCount;
        for (let i = 0; i < n; i++) {
            x += this.positions[3 * i];
            y += this.positions[3 * i + 1];
            z += this.positions[3 * i + 2];
        }
        return [x / n, y / n, z / n];
    }
    radiusAbout(c) {
        let best = 0;
        for (let i = 0; i < this.vertexCount; i++) {
            const dx = this.positions[3 * i] - c[0];
            const dy = this.positions[3 * i + 1] - c[1];
            const dz = this.positions[3 * i + 2] - c[2];
            best = Math.max(best, dx * dx + dy * dy + dz * dz);
        }
        return Math.sqrt(best);
    }
}
