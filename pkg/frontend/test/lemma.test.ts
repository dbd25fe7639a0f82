import { describe, expect, it } from "vitest";

import { lemmatize } from "../src/lemma";

describe("lemmatize", () => {
  it("handles common inflections", () => {
    expect(lemmatize("captured")).toBe("capture");
    expect(lemmatize("attacks")).toBe("attack");
    expect(lemmatize("bombings")).toBe("bombing");
    expect(lemmatize("running")).toBe("run");
    expect(lemmatize("carries")).toBe("carry");
    expect(lemmatize("crashes")).toBe("crash");
  });

  it("knows a few irregular verbs", () => {
    expect(lemmatize("struck")).toBe("strike");
    expect(lemmatize("went")).toBe("go");
    expect(lemmatize("flew")).toBe("fly");
  });

  it("lowercases and leaves short words alone", () => {
    expect(lemmatize("War")).toBe("war");
    expect(lemmatize("bus")).toBe("bus");
  });
});
