export class BeamCut {
    static __wrap(ptr) {
        const obj = Object.create(BeamCut.prototype);
        obj.__wbg_ptr = ptr;
        BeamCutFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        BeamCutFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_beamcut_free(ptr, 0);
    }
    /**
     * @returns {Float64Array}
     */
    get angles_deg() {
        const ret = wasm.beamcut_angles_deg(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get gain_db() {
        const ret = wasm.beamcut_gain_db(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get null_deg() {
        const ret = wasm.__wbg_get_beamcut_null_deg(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get predicted_deg() {
        const ret = wasm.__wbg_get_beamcut_predicted_deg(this.__wbg_ptr);
        return ret;
    }
    /**
     * NaN when the pattern has no half-power point.
     * @returns {number}
     */
    get width_deg() {
        const ret = wasm.__wbg_get_beamcut_width_deg(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set null_deg(arg0) {
        wasm.__wbg_set_beamcut_null_deg(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set predicted_deg(arg0) {
        wasm.__wbg_set_beamcut_predicted_deg(this.__wbg_ptr, arg0);
    }
    /**
     * NaN when the pattern has no half-power point.
     * @param {number} arg0
     */
    set width_deg(arg0) {
        wasm.__wbg_set_beamcut_width_deg(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) BeamCut.prototype[Symbol.dispose] = BeamCut.prototype.free;

export class RangeCut {
    static __wrap(ptr) {
        const obj = Object.create(RangeCut.prototype);
        obj.__wbg_ptr = ptr;
        RangeCutFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        RangeCutFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_rangecut_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get averaged_peaks() {
        const ret = wasm.__wbg_get_rangecut_averaged_peaks(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get coherent_peaks() {
        const ret = wasm.__wbg_get_rangecut_coherent_peaks(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float64Array}
     */
    get averaged_db() {
        const ret = wasm.rangecut_averaged_db(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get coherent_db() {
        const ret = wasm.rangecut_coherent_db(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get ranges_m() {
        const ret = wasm.rangecut_ranges_m(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @param {number} arg0
     */
    set averaged_peaks(arg0) {
        wasm.__wbg_set_rangecut_averaged_peaks(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set coherent_peaks(arg0) {
        wasm.__wbg_set_rangecut_coherent_peaks(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) RangeCut.prototype[Symbol.dispose] = RangeCut.prototype.free;

export class VitalsView {
    static __wrap(ptr) {
        const obj = Object.create(VitalsView.prototype);
        obj.__wbg_ptr = ptr;
        VitalsViewFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        VitalsViewFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_vitalsview_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get hr_bpm() {
        const ret = wasm.__wbg_get_vitalsview_hr_bpm(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get range_bin() {
        const ret = wasm.__wbg_get_vitalsview_range_bin(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get rr_bpm() {
        const ret = wasm.__wbg_get_vitalsview_rr_bpm(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set hr_bpm(arg0) {
        wasm.__wbg_set_vitalsview_hr_bpm(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set range_bin(arg0) {
        wasm.__wbg_set_vitalsview_range_bin(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set rr_bpm(arg0) {
        wasm.__wbg_set_vitalsview_rr_bpm(this.__wbg_ptr, arg0);
    }
    /**
     * Spectrum of the phase differential.
     * @returns {Float64Array}
     */
    get dpsi_db() {
        const ret = wasm.vitalsview_dpsi_db(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get freqs_hz() {
        const ret = wasm.vitalsview_freqs_hz(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Spectrum of the unwrapped phase.
     * @returns {Float64Array}
     */
    get psi_db() {
        const ret = wasm.vitalsview_psi_db(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) VitalsView.prototype[Symbol.dispose] = VitalsView.prototype.free;

/**
 * @param {number} n_tx
 * @param {number} n_rx
 * @param {number} spacing_wl
 * @param {number} steer_az_deg
 * @returns {BeamCut}
 */
export function beam_cut(n_tx, n_rx, spacing_wl, steer_az_deg) {
    const ret = wasm.beam_cut(n_tx, n_rx, spacing_wl, steer_az_deg);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return BeamCut.__wrap(ret[0]);
}

/**
 * @param {number} r1
 * @param {number} r2
 * @param {number} phase_deg
 * @param {boolean} hann
 * @returns {RangeCut}
 */
export function range_cut(r1, r2, phase_deg, hann) {
    const ret = wasm.range_cut(r1, r2, phase_deg, hann);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return RangeCut.__wrap(ret[0]);
}

/**
 * @param {number} rr_bpm
 * @param {number} hr_bpm
 * @param {number} range_m
 * @param {number} az_deg
 * @param {number} clutter_gain
 * @param {number} snr_db
 * @param {string} mode
 * @param {number} seed
 * @returns {VitalsView}
 */
export function vitals(rr_bpm, hr_bpm, range_m, az_deg, clutter_gain, snr_db, mode, seed) {
    const ptr0 = passStringToWasm0(mode, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
    const len0 = WASM_VECTOR_LEN;
    const ret = wasm.vitals(rr_bpm, hr_bpm, range_m, az_deg, clutter_gain, snr_db, ptr0, len0, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return VitalsView.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./vgradar_web_bg.js": import0,
    };
}

const BeamCutFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_beamcut_free(ptr, 1));
const RangeCutFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_rangecut_free(ptr, 1));
const VitalsViewFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_vitalsview_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function passStringToWasm0(arg, malloc, realloc) {
    if (realloc === undefined) {
        const buf = cachedTextEncoder.encode(arg);
        const ptr = malloc(buf.length, 1) >>> 0;
        getUint8ArrayMemory0().subarray(ptr, ptr + buf.length).set(buf);
        WASM_VECTOR_LEN = buf.length;
        return ptr;
    }

    let len = arg.length;
    let ptr = malloc(len, 1) >>> 0;

    const mem = getUint8ArrayMemory0();

    let offset = 0;

    for (; offset < len; offset++) {
        const code = arg.charCodeAt(offset);
        if (code > 0x7F) break;
        mem[ptr + offset] = code;
    }
    if (offset !== len) {
        if (offset !== 0) {
            arg = arg.slice(offset);
        }
        ptr = realloc(ptr, len, len = offset + arg.length * 3, 1) >>> 0;
        const view = getUint8ArrayMemory0().subarray(ptr + offset, ptr + len);
        const ret = cachedTextEncoder.encodeInto(arg, view);

        offset += ret.written;
        ptr = realloc(ptr, len, offset, 1) >>> 0;
    }

    WASM_VECTOR_LEN = offset;
    return ptr;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

const cachedTextEncoder = new TextEncoder();

if (!('encodeInto' in cachedTextEncoder)) {
    cachedTextEncoder.encodeInto = function (arg, view) {
        const buf = cachedTextEncoder.encode(arg);
        view.set(buf);
        return {
            read: arg.length,
            written: buf.length
        };
    };
}

let WASM_VECTOR_LEN = 0;

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('vgradar_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
