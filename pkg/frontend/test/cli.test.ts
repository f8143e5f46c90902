import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
const GOLDEN = fileURLToPath(new URL("../golden", import.meta.url));

let workdir: string;
beforeAll(() => {
  workdir = mkdtempSync(join(tmpdir(), "render-"));
});
afterAll(() => {
  rmSync(workdir, { recursive: true, force: true });
});

function render(...args: string[]) {
  const proc = spawnSync(process.execPath, [CLI, ...args], { encoding: "utf8" });
  return { status: proc.status, stderr: proc.stderr, stdout: proc.stdout };
}

const GOLDEN_BY_KIND: Record<string, string> = {
  "variance-curves": "variance_curves.csv",
  "scheme-crossover": "scheme_crossover.csv",
  "pac-losses": "pac_losses.csv",
  "walk-constant": "walk.csv",
};

describe("render CLI", () => {
  for (const [kind, csv] of Object.entries(GOLDEN_BY_KIND)) {
    it(`renders ${kind} from ${csv} with exit 0`, () => {
      const out = join(workdir, `${kind}.svg`);
      const res = render("--kind", kind, "--in", join(GOLDEN, csv), "--out", out);
      expect(res.stderr).toBe("");
      expect(res.status).toBe(0);
      const svg = readFileSync(out, "utf8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    });
  }

  it("is byte-identical across reruns", () => {
    const a = join(workdir, "first.svg");
    const b = join(workdir, "second.svg");
    const csv = join(GOLDEN, "walk.csv");
    expect(render("--kind", "walk-constant", "--in", csv, "--out", a).status).toBe(0);
    expect(render("--kind", "walk-constant", "--in", csv, "--out", b).status).toBe(0);
    expect(readFileSync(a, "utf8")).toBe(readFileSync(b, "utf8"));
  });

  it("accepts explicit axis flags", () => {
    const out = join(workdir, "crossover-logy.svg");
    const res = render(
      "--kind", "scheme-crossover",
      "--in", join(GOLDEN, "scheme_crossover.csv"),
      "--out", out,
      "--logy",
    );
    expect(res.status).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });

  it("fails with column diagnostics when the schema does not match", () => {
    const out = join(workdir, "mismatch.svg");
    const res = render(
      "--kind", "variance-curves",
      "--in", join(GOLDEN, "walk.csv"),
      "--out", out,
    );
    expect(res.status).not.toBe(0);
    expect(res.stderr).toMatch(/missing: .*factor_uniform/);
    expect(res.stderr).toMatch(/unexpected: .*truncation/);
  });

  it("renders empty axes from a header-only file with exit 0", () => {
    const csv = join(workdir, "empty.csv");
    writeFileSync(csv, "alpha,truncation,replicates,estimate,ci_halfwidth\n");
    const out = join(workdir, "empty.svg");
    const res = render("--kind", "walk-constant", "--in", csv, "--out", out);
    expect(res.status).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });

  it("rejects an unknown kind", () => {
    const res = render(
      "--kind", "pie",
      "--in", join(GOLDEN, "walk.csv"),
      "--out", join(workdir, "pie.svg"),
    );
    expect(res.status).not.toBe(0);
    expect(res.stderr).toContain("unknown kind");
  });

  it("fails cleanly on a missing input file", () => {
    const res = render(
      "--kind", "walk-constant",
      "--in", join(workdir, "absent.csv"),
      "--out", join(workdir, "absent.svg"),
    );
    expect(res.status).not.toBe(0);
    expect(res.stderr).toContain("cannot read");
  });

  it("requires the three mandatory flags", () => {
    const res = render("--kind", "walk-constant");
    expect(res.status).not.toBe(0);
    expect(res.stderr).toContain("--in is required");
  });
});
