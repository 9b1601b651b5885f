import { describe, expect, it } from "vitest";

import { renderPredictionRow, renderPredictions, renderReport } from "../src/view.js";
import { makePayload, makeRow } from "./helpers.js";

describe("renderPredictionRow", () => {
  it("shows the recency badge for cache-resident rows", () => {
    const row = renderPredictionRow(
      makeRow({ in_cache: true, recency_index: 0 }),
      true,
      false,
    );
    const badge = row.querySelector(".badge.cache");
    expect(badge?.textContent).toBe("cache 0");
    expect((badge as HTMLElement).dataset.recency).toBe("0");
  });

  it("omits badges when the service flags are off", () => {
    const row = renderPredictionRow(makeRow(), true, false);
    expect(row.querySelector(".badge.cache")).toBeNull();
    expect(row.querySelector(".badge.transfer")).toBeNull();
  });

  it("shows the version-transfer badge on transferred rows", () => {
    const row = renderPredictionRow(makeRow({ version_transferred: true }), false, false);
    expect(row.querySelector(".badge.transfer")?.textContent).toBe("version transfer");
  });

  it("displays the score verbatim", () => {
    const score = 0.30000000000000004; // full double precision must survive
    const row = renderPredictionRow(makeRow({ score }), false, false);
    expect(row.querySelector(".score")?.textContent).toBe(String(score));
    expect(row.dataset.score).toBe(String(score));
    expect(Number(row.dataset.score)).toBe(score);
  });
});

describe("renderPredictions", () => {
  it("keeps exactly the service order, no client-side re-ranking", () => {
    const payload = makePayload([
      makeRow({ label: "zzz", score: 0.1 }),
      makeRow({ label: "aaa", score: 0.9 }),
      makeRow({ label: "mmm", score: 0.5 }),
    ]);
    const rows = renderPredictions(payload, new Set(), 0).querySelectorAll(".prediction-row");
    expect([...rows].map((r) => (r as HTMLElement).dataset.label)).toEqual([
      "zzz",
      "aaa",
      "mmm",
    ]);
  });

  it("marks selected rows and lists manual additions", () => {
    const payload = makePayload([makeRow({ label: "liba" }), makeRow({ label: "libb" })]);
    const selected = new Set(["liba", "extra_lib"]);
    const section = renderPredictions(payload, selected, 0);
    const boxes = [...section.querySelectorAll(".checkbox")].map((el) => el.textContent);
    expect(boxes).toEqual(["[x]", "[ ]"]);
    expect(section.querySelector(".chip")?.textContent).toBe("extra_lib");
  });
});

describe("renderReport", () => {
  it("renders description, references and cpe strings as plain text", () => {
    const payload = makePayload([makeRow()]);
    const card = renderReport(payload.report);
    expect(card.querySelector(".report-id")?.textContent).toBe("CVE-2020-0001");
    expect(card.querySelector(".report-description")?.textContent).toContain("alpha engine");
    expect(card.querySelector(".reference summary")?.textContent).toBe("advisory");
    expect(card.querySelector(".ref-text")?.textContent).toBe("body text");
    expect(card.querySelector(".cpe-entry")?.textContent).toContain("cpe:2.3:a:alphaengine");
  });

  it("renders reference text inert, not as markup", () => {
    const payload = makePayload([makeRow()]);
    payload.report.references[0].text = "<script>alert(1)</script>";
    const card = renderReport(payload.report);
    expect(card.querySelector(".ref-text script")).toBeNull();
    expect(card.querySelector(".ref-text")?.textContent).toBe("<script>alert(1)</script>");
  });
});
