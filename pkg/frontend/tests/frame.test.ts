import { describe, expect, it } from "vitest";
import { decodePng, encodePpm, pngDataUrl, toBase64 } from "../src/frame.js";
import { makePng, mulberry32, randomRaster } from "./helpers.js";

describe("decodePng", () => {
  it("recovers pixels from an unfiltered image", async () => {
    const raster = randomRaster(mulberry32(7), 13, 9);
    const out = await decodePng(makePng(raster, 0));
    expect(out.width).toBe(13);
    expect(out.height).toBe(9);
    expect(out.pixels).toEqual(raster.pixels);
  });

  it.each([1, 2, 3, 4])("undoes row filter %d", async (filter) => {
    const raster = randomRaster(mulberry32(40 + filter), 21, 17);
    const out = await decodePng(makePng(raster, filter));
    expect(out.pixels).toEqual(raster.pixels);
  });

  it("rejects non-PNG bytes", async () => {
    await expect(decodePng(new Uint8Array([1, 2, 3, 4]))).rejects.toThrow(/PNG/);
  });

  it("rejects layouts the service never produces", async () => {
    const png = makePng(randomRaster(mulberry32(3), 4, 4), 0);
    // corrupt the IHDR color type (offset: 8 sig + 8 chunk header + 9)
    png[8 + 8 + 9] = 6;
    await expect(decodePng(png)).rejects.toThrow(/unsupported/);
  });
});

describe("encodePpm", () => {
  it("writes the header then packed RGB rows", () => {
    const raster = { width: 2, height: 1, pixels: new Uint8Array([1, 2, 3, 4, 5, 6]) };
    const out = encodePpm(raster);
    const header = "P6\n2 1\n255\n";
    expect(new TextDecoder().decode(out.subarray(0, header.length))).toBe(header);
    expect(Array.from(out.subarray(header.length))).toEqual([1, 2, 3, 4, 5, 6]);
  });
});

describe("toBase64", () => {
  it("matches Buffer encoding across chunk boundaries", () => {
    const rand = mulberry32(99);
    for (const size of [0, 1, 3, 1000, 0x8000 - 1, 0x8000, 0x8000 + 1, 200_000]) {
      const bytes = new Uint8Array(size);
      for (let i = 0; i < size; i++) bytes[i] = Math.floor(rand() * 256);
      expect(toBase64(bytes)).toBe(Buffer.from(bytes).toString("base64"));
    }
  });
});

describe("pngDataUrl", () => {
  it("prefixes the media type", () => {
    expect(pngDataUrl(new Uint8Array([137, 80]))).toMatch(/^data:image\/png;base64,/);
  });
});
