import { describe, expect, it } from "vitest";
import { DraftStore } from "../src/drafts.js";
import { memoryStorage } from "./helpers.js";

describe("DraftStore", () => {
  it("round-trips a draft keyed by session and round", () => {
    const store = new DraftStore(memoryStorage());
    store.save("s0001", 1, { rationale: "think", answer: "4" });
    expect(store.load("s0001", 1)).toEqual({ rationale: "think", answer: "4" });
    expect(store.load("s0001", 2)).toBeNull();
    expect(store.load("s0002", 1)).toBeNull();
  });

  it("clears only the addressed round", () => {
    const store = new DraftStore(memoryStorage());
    store.save("s0001", 1, { rationale: "first", answer: "1" });
    store.save("s0001", 2, { rationale: "second", answer: "2" });
    store.clear("s0001", 1);
    expect(store.load("s0001", 1)).toBeNull();
    expect(store.load("s0001", 2)).toEqual({ rationale: "second", answer: "2" });
  });

  it("treats corrupt stored values as no draft", () => {
    const storage = memoryStorage();
    storage.setItem("adaprompt-draft:s0001:1", "{not json");
    expect(new DraftStore(storage).load("s0001", 1)).toBeNull();
  });

  it("treats wrong-shaped stored values as no draft", () => {
    const storage = memoryStorage();
    storage.setItem("adaprompt-draft:s0001:1", JSON.stringify({ rationale: 5 }));
    expect(new DraftStore(storage).load("s0001", 1)).toBeNull();
  });

  it("survives a storage backend that throws", () => {
    const boom = () => {
      throw new Error("quota exceeded");
    };
    const store = new DraftStore({ getItem: boom, setItem: boom, removeItem: boom });
    expect(() => store.save("s", 1, { rationale: "r", answer: "a" })).not.toThrow();
    expect(store.load("s", 1)).toBeNull();
    expect(() => store.clear("s", 1)).not.toThrow();
    expect(store.loadAnnotatorId()).toBe("");
    expect(() => store.saveAnnotatorId("alice")).not.toThrow();
  });

  it("persists the annotator id separately from drafts", () => {
    const storage = memoryStorage();
    const store = new DraftStore(storage);
    store.saveAnnotatorId("alice");
    expect(store.loadAnnotatorId()).toBe("alice");
    expect(new DraftStore(storage).loadAnnotatorId()).toBe("alice");
    expect(store.load("alice", 0)).toBeNull();
  });
});
