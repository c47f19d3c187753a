/** Panel and selection state. The inflate control may only fire when the
 * parameter panel satisfies the engine invariants, so an invalid panel can
 * never emit an inflate_to frame. */
export const DEFAULT_PARAMS = {
    diameter: 6.0,
    length: null,
    foreshortening: 0.0,
    k: 0.4,
    d_infl: 6.5,
    dr: 0.1,
    d_con: 0.1,
    r_init: 0.1,
};
export function panelErrors(p) {
    const errors = [];
    if (!(p.diameter > 0))
        errors.push("diameter must be positive");
    if (!(p.dr > 0))
        errors.push("dr must be positive");
    if (!(p.d_con > 0))
        errors.push("d_con must be positive");
    if (!(p.d_infl > 0))
        errors.push("d_infl must be positive");
    if (!(p.k >= 0))
        errors.push("k must be >= 0");
    if (!(p.r_init >= 0))
        errors.push("r_init must be >= 0");
    if (!(p.diameter / 2 - p.k / 4 > p.r_init)) {
        errors.push("corrected target radius must exceed r_init");
    }
    if (!(p.foreshortening >= 0 && p.foreshortening < 1)) {
        errors.push("foreshortening must be in [0, 1)");
    }
    if (p.length !== null && !(p.length > 0))
        errors.push("length must be positive");
    return errors;
}
/** UI session state machine: tracks picks, parameters and whether an
 * inflation may be requested. */
export class UiState {
    constructor() {
        this.params = { ...DEFAULT_PARAMS };
        this.start = null;
        this.end = null;
        this.loaded = false;
        this.axisAccepted = false;
        this.inflating = false;
        this.currentRadius = 0.0;
        this.hint = "";
    }
    get panelValid() {
        return panelErrors(this.params).length === 0;
    }
    /** The inflate control is enabled only with a loaded mesh, an accepted
     * axis, valid parameters, and no in-flight inflation. */
    get inflateEnabled() {
        return this.loaded && this.axisAccepted && this.panelValid && !this.inflating;
    }
    /** Records a pick; the second pick completes the selection and emits
     * select_axis. Returns true when the selection was sent. */
    recordPick(anchor, emitter) {
        if (this.start === null || this.end !== null) {
            this.start = anchor;
            this.end = null;
            this.axisAccepted = false;
            this.hint = "start set; pick the end point";
            return false;
        }
        this.end = anchor;
        const body = {
            start: { path: this.start.path, arc: this.start.arc },
            end: { path: anchor.path, arc: anchor.arc },
            foreshortening: this.params.foreshortening,
        };
        if (this.params.length !== null) {
            body.nominal_length = this.params.length;
        }
        emitter.send("select_axis", body);
        this.hint = "axis requested";
        return true;
    }
    /** Emits inflate_to only when the control is enabled; an invalid panel
     * emits nothing. */
    requestInflate(targetRadius, emitter) {
        if (!this.inflateEnabled) {
            this.hint = this.panelValid
                ? "load a mesh and select an axis first"
                : `fix parameters: ${panelErrors(this.params).join("; ")}`;
            return false;
        }
        emitter.send("set_params", { diameter: this.params.diameter, k: this.params.k,
            d_infl: this.params.d_infl, dr: this.params.dr, d_con: this.params.d_con,
            r_init: this.params.r_init });
        emitter.send("inflate_to", { radius: targetRadius });
        this.inflating = true;
        return true;
    }
}
