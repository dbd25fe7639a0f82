/**
 * Small rule lemmatizer for the --lemmas flag: lowercases the trigger head
 * and strips common English inflection suffixes. A stand-in for a full
 * tagger pipeline; good enough to populate head_lemma fields for the
 * lemma-match baselines.
 */

const IRREGULAR: Record<string, string> = {
  began: "begin",
  begun: "begin",
  bought: "buy",
  brought: "bring",
  came: "come",
  chose: "choose",
  did: "do",
  done: "do",
  fell: "fall",
  fled: "flee",
  flew: "fly",
  fought: "fight",
  gave: "give",
  went: "go",
  gone: "go",
  held: "hold",
  kept: "keep",
  killed: "kill",
  left: "leave",
  lost: "lose",
  made: "make",
  met: "meet",
  paid: "pay",
  ran: "run",
  said: "say",
  sent: "send",
  shot: "shoot",
  sold: "sell",
  spoke: "speak",
  struck: "strike",
  took: "take",
  taken: "take",
  told: "tell",
  thought: "think",
  was: "be",
  were: "be",
  won: "win",
  wrote: "write",
};

const VOWELS = new Set(["a", "e", "i", "o", "u"]);

export function lemmatize(word: string): string {
  const lower = word.toLowerCase();
  if (IRREGULAR[lower]) return IRREGULAR[lower];
  if (lower.length <= 3) return lower;

  if (lower.endsWith("ies") && lower.length > 4) {
    return lower.slice(0, -3) + "y";
  }
  if (lower.endsWith("sses") || lower.endsWith("shes") ||
      lower.endsWith("ches") || lower.endsWith("xes")) {
    return lower.slice(0, -2);
  }
  if (lower.endsWith("ing") && lower.length > 5) {
    return restoreE(undouble(lower.slice(0, -3)));
  }
  if (lower.endsWith("ied") && lower.length > 4) {
    return lower.slice(0, -3) + "y";
  }
  if (lower.endsWith("ed") && lower.length > 4) {
    return restoreE(undouble(lower.slice(0, -2)));
  }
  if (lower.endsWith("s") && !lower.endsWith("ss") && !lower.endsWith("us")) {
    return lower.slice(0, -1);
  }
  return lower;
}

/** "stopp" -> "stop", "runn" -> "run"; keep "fall", "kill", "pass". */
function undouble(stem: string): string {
  const n = stem.length;
  if (
    n >= 3 &&
    stem[n - 1] === stem[n - 2] &&
    !VOWELS.has(stem[n - 1]) &&
    !["l", "s", "z"].includes(stem[n - 1])
  ) {
    return stem.slice(0, -1);
  }
  return stem;
}

// Stem endings that almost always carry a silent e in the base form
// ("captur"/"seiz"/"mov"/"charg" and friends). Deliberately narrow:
// guessing wrong here is worse than leaving a bare stem, since the
// matcher downstream accepts substring containment anyway.
const RESTORE_E_2 = new Set(["ur", "rg", "dg", "uc", "at", "iz", "us"]);
const RESTORE_E_1 = new Set(["v", "z", "c"]);

function restoreE(stem: string): string {
  if (stem.length < 3) return stem;
  if (RESTORE_E_2.has(stem.slice(-2)) || RESTORE_E_1.has(stem.slice(-1))) {
    return stem + "e";
  }
  return stem;
}
