import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

/** Candidate ids of gallery tiles in document order. */
export function extractTileOrder(html: string): string[] {
  const out: string[] = [];
  const re = /<figure class="tile[^"]*" data-candidate="([^"]+)"/g;
  let match;
  while ((match = re.exec(html)) !== null) {
    out.push(match[1]);
  }
  return out;
}

/** Section keys of a rendered proposal browser in document order. */
export function extractSectionKeys(html: string): string[] {
  const out: string[] = [];
  const re = /<details class="section"[^>]*data-section="([^"]+)"/g;
  let match;
  while ((match = re.exec(html)) !== null) {
    out.push(match[1]);
  }
  return out;
}
