// Frame transcoding for track creation. The service serves previews as
// PNG but accepts selection frames only as base64 PPM, so the console
// decodes the PNG itself. The previews are always 8-bit RGB and
// non-interlaced, which keeps the decoder small; anything else is
// rejected rather than guessed at. No canvas involved, so this works
// the same headless and in a browser.

export interface Raster {
  width: number;
  height: number;
  /** Packed RGB, 3 bytes per pixel, row-major. */
  pixels: Uint8Array;
}

const PNG_SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

async function inflate(data: Uint8Array<ArrayBuffer>): Promise<Uint8Array> {
  const stream = new DecompressionStream("deflate");
  const writer = stream.writable.getWriter();
  void writer.write(data).catch(() => {});
  void writer.close().catch(() => {});
  const reader = stream.readable.getReader();
  const chunks: Uint8Array[] = [];
  let total = 0;
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    chunks.push(value);
    total += value.length;
  }
  const out = new Uint8Array(total);
  let at = 0;
  for (const chunk of chunks) {
    out.set(chunk, at);
    at += chunk.length;
  }
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

function unfilter(raw: Uint8Array, width: number, height: number): Uint8Array {
  const bpp = 3;
  const stride = width * bpp;
  const out = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    for (let i = 0; i < stride; i++) {
      const cur = raw[src + i]!;
      const left = i >= bpp ? out[dst + i - bpp]! : 0;
      const up = y > 0 ? out[dst + i - stride]! : 0;
      const upLeft = y > 0 && i >= bpp ? out[dst + i - bpp - stride]! : 0;
      let value: number;
      switch (filter) {
        case 0:
          value = cur;
          break;
        case 1:
          value = cur + left;
          break;
        case 2:
          value = cur + up;
          break;
        case 3:
          value = cur + ((left + up) >> 1);
          break;
        case 4:
          value = cur + paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`PNG row ${y} has unknown filter type ${filter}`);
      }
      out[dst + i] = value & 0xff;
    }
  }
  return out;
}

export async function decodePng(bytes: Uint8Array): Promise<Raster> {
  if (bytes.length < 8 || PNG_SIGNATURE.some((b, i) => bytes[i] !== b)) {
    throw new Error("not a PNG");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  let at = 8;
  while (at + 8 <= bytes.length) {
    const length = view.getUint32(at);
    const type = String.fromCharCode(
      bytes[at + 4]!, bytes[at + 5]!, bytes[at + 6]!, bytes[at + 7]!,
    );
    const data = bytes.subarray(at + 8, at + 8 + length);
    if (type === "IHDR") {
      width = view.getUint32(at + 8);
      height = view.getUint32(at + 12);
      const bitDepth = data[8];
      const colorType = data[9];
      const interlace = data[12];
      if (bitDepth !== 8 || colorType !== 2 || interlace !== 0) {
        throw new Error(
          `unsupported PNG layout (depth ${bitDepth}, color ${colorType}, ` +
          `interlace ${interlace}); previews are plain 8-bit RGB`,
        );
      }
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    at += 12 + length; // length + type + data + crc
  }
  if (!width || !height || !idat.length) {
    throw new Error("truncated PNG");
  }
  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let off = 0;
  for (const chunk of idat) {
    compressed.set(chunk, off);
    off += chunk.length;
  }
  const raw = await inflate(compressed);
  if (raw.length !== (width * 3 + 1) * height) {
    throw new Error(`PNG pixel data is ${raw.length} bytes, expected ${(width * 3 + 1) * height}`);
  }
  return { width, height, pixels: unfilter(raw, width, height) };
}

export function encodePpm(raster: Raster): Uint8Array {
  const header = `P6\n${raster.width} ${raster.height}\n255\n`;
  const out = new Uint8Array(header.length + raster.pixels.length);
  for (let i = 0; i < header.length; i++) out[i] = header.charCodeAt(i);
  out.set(raster.pixels, header.length);
  return out;
}

export function toBase64(bytes: Uint8Array): string {
  let binary = "";
  const step = 0x8000; // fromCharCode argument limit
  for (let i = 0; i < bytes.length; i += step) {
    binary += String.fromCharCode(...bytes.subarray(i, i + step));
  }
  return btoa(binary);
}

export function pngDataUrl(bytes: Uint8Array): string {
  return "data:image/png;base64," + toBase64(bytes);
}
