/** WebSocket client: outgoing seq numbering and reassembly of envelopes with
 * their trailing binary frames. */
function binaryFramesExpected(env) {
    if (!env.body || env.body["binary"] !== true)
        return 0;
    return env.kind === "mesh_full" ? 2 : 1;
}
/** Pure reassembler: feed raw frames in arrival order, complete messages
 * come out. Kept transport-free so it is testable. */
export class FrameAssembler {
    constructor() {
        this.pending = null;
        this.want = 0;
    }
    feedText(raw) {
        const envelope = JSON.parse(raw);
        const want = binaryFramesExpected(envelope);
        if (want === 0) {
            return { envelope, binary: [] };
        }
        this.pending = { envelope, binary: [] };
        this.want = want;
        return null;
    }
    feedBinary(data) {
        if (!this.pending) {
            throw new Error("binary frame without a pending envelope");
        }
        this.pending.binary.push(data);
        if (this.pending.binary.length === this.want) {
            const done = this.pending;
            this.pending = null;
            return done;
        }
        return null;
    }
}
export class Connection {
    constructor(url, onMessage, onClose = () => undefined) {
        this.onMessage = onMessage;
        this.onClose = onClose;
        this.assembler = new FrameAssembler();
        this.seq = 0;
        this.ws = new WebSocket(url);
        this.ws.binaryType = "arraybuffer";
        this.ws.onmessage = (ev) => {
            const msg = typeof ev.data === "string"
                ? this.assembler.feedText(ev.data)
                : this.assembler.feedBinary(ev.data);
            if (msg)
                this.onMessage(msg);
        };
        this.ws.onclose = () => this.onClose();
    }
    send(kind, body) {
        this.seq += 1;
        this.ws.send(JSON.stringify({ kind, seq: this.seq, body }));
    }
    close() {
        this.ws.close();
    }
}
