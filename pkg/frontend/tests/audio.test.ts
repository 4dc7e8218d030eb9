import { describe, expect, it } from "vitest";

import { encodeWav, wavDurationSeconds } from "../src/audio.js";

describe("encodeWav / wavDurationSeconds", () => {
  it("roundtrips duration exactly", () => {
    const samples = new Float32Array(16000); // 1 s at 16 kHz
    const wav = encodeWav(samples, 16000);
    expect(wavDurationSeconds(wav)).toBeCloseTo(1.0, 9);
  });

  it("handles fractional durations", () => {
    const wav = encodeWav(new Float32Array(4000), 16000);
    expect(wavDurationSeconds(wav)).toBeCloseTo(0.25, 9);
  });

  it("writes a valid RIFF header", () => {
    const wav = encodeWav(new Float32Array(10), 16000);
    const bytes = new Uint8Array(wav);
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("RIFF");
    expect(String.fromCharCode(...bytes.slice(8, 12))).toBe("WAVE");
    expect(wav.byteLength).toBe(44 + 20);
  });

  it("clips out-of-range samples", () => {
    const wav = encodeWav(new Float32Array([2.0, -2.0]), 16000);
    const view = new DataView(wav);
    expect(view.getInt16(44, true)).toBe(32767);
    expect(view.getInt16(46, true)).toBe(-32767);
  });

  it("rejects non-WAV bytes", () => {
    const junk = new TextEncoder().encode("definitely not audio at all....").buffer;
    expect(() => wavDurationSeconds(junk as ArrayBuffer)).toThrow("not a WAV file");
  });
});
