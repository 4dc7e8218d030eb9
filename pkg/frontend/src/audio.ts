// Client-side WAV handling: duration checks before upload and PCM16
// encoding of recorded samples. The service only accepts 16 kHz mono WAV,
// so recording opens the AudioContext at that rate.

export const SAMPLE_RATE = 16000;

/** Duration in seconds of a PCM WAV file, from its RIFF header. */
export function wavDurationSeconds(buf: ArrayBuffer): number {
  const view = new DataView(buf);
  if (buf.byteLength < 44 || readTag(view, 0) !== "RIFF" || readTag(view, 8) !== "WAVE") {
    throw new Error("not a WAV file");
  }
  let sampleRate = 0;
  let bytesPerSecond = 0;
  let offset = 12;
  while (offset + 8 <= buf.byteLength) {
    const tag = readTag(view, offset);
    const size = view.getUint32(offset + 4, true);
    if (tag === "fmt ") {
      sampleRate = view.getUint32(offset + 12, true);
      const channels = view.getUint16(offset + 10, true);
      const bitsPerSample = view.getUint16(offset + 22, true);
      bytesPerSecond = sampleRate * channels * (bitsPerSample / 8);
    } else if (tag === "data") {
      if (bytesPerSecond === 0) throw new Error("WAV data before fmt chunk");
      return size / bytesPerSecond;
    }
    offset += 8 + size + (size % 2);
  }
  throw new Error("WAV file has no data chunk");
}

function readTag(view: DataView, offset: number): string {
  return String.fromCharCode(
    view.getUint8(offset),
    view.getUint8(offset + 1),
    view.getUint8(offset + 2),
    view.getUint8(offset + 3),
  );
}

/** Encode float samples in [-1, 1] as a mono PCM16 WAV file. */
export function encodeWav(samples: Float32Array, sampleRate: number): ArrayBuffer {
  const dataSize = samples.length * 2;
  const buf = new ArrayBuffer(44 + dataSize);
  const view = new DataView(buf);
  writeTag(view, 0, "RIFF");
  view.setUint32(4, 36 + dataSize, true);
  writeTag(view, 8, "WAVE");
  writeTag(view, 12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeTag(view, 36, "data");
  view.setUint32(40, dataSize, true);
  for (let i = 0; i < samples.length; i++) {
    const s = Math.max(-1, Math.min(1, samples[i]));
    view.setInt16(44 + 2 * i, Math.round(s * 32767), true);
  }
  return buf;
}

function writeTag(view: DataView, offset: number, tag: string): void {
  for (let i = 0; i < 4; i++) view.setUint8(offset + i, tag.charCodeAt(i));
}

/** Microphone recorder collecting raw samples; stop() returns a WAV blob. */
export class Recorder {
  private chunks: Float32Array[] = [];
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.context = new AudioContext({ sampleRate: SAMPLE_RATE });
    const source = this.context.createMediaStreamSource(this.stream);
    const processor = this.context.createScriptProcessor(4096, 1, 1);
    processor.onaudioprocess = (ev) => {
      this.chunks.push(new Float32Array(ev.inputBuffer.getChannelData(0)));
    };
    source.connect(processor);
    processor.connect(this.context.destination);
  }

  async stop(): Promise<Blob> {
    this.stream?.getTracks().forEach((track) => track.stop());
    await this.context?.close();
    const total = this.chunks.reduce((n, c) => n + c.length, 0);
    const samples = new Float32Array(total);
    let at = 0;
    for (const chunk of this.chunks) {
      samples.set(chunk, at);
      at += chunk.length;
    }
    this.chunks = [];
    return new Blob([encodeWav(samples, SAMPLE_RATE)], { type: "audio/wav" });
  }
}
