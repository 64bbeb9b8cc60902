/**
 * End-to-end annotation flow against the real service over HTTP:
 * login -> three complete verdicts -> done screen; resubmission 409;
 * and the written verdicts.jsonl aggregates identically to direct ingestion.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError, DIMENSIONS, type Choice, type Dimension } from "../src/api.js";
import { SessionState } from "../src/state.js";

const REPO = resolve(fileURLToPath(import.meta.url), "../../..");
const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let workdir = "";

function py(args: string[]): void {
  const result = spawnSync(PYTHON, args, {
    cwd: REPO,
    env: { ...process.env, PYTHONPATH: join(REPO, "src") },
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(`python ${args.join(" ")} failed:\n${result.stdout}\n${result.stderr}`);
  }
}

async function waitForHealth(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "eval-ui-e2e-"));
  py(["scripts/make_demo_eval.py", workdir, "--settings", "3", "--methods", "2"]);
  server = spawn(
    PYTHON,
    [
      "-m",
      "storyloom.cli",
      "serve",
      "--plan", join(workdir, "plan.json"),
      "--stories-dir", join(workdir, "stories"),
      "--credentials", join(workdir, "credentials.json"),
      "--verdicts", join(workdir, "verdicts.jsonl"),
      "--port", String(PORT),
    ],
    { cwd: REPO, env: { ...process.env, PYTHONPATH: join(REPO, "src") }, stdio: "pipe" },
  );
  await waitForHealth();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("annotation session over the live service", () => {
  const api = new ApiClient(BASE);
  const state = new SessionState();
  const submitted: Record<string, Record<Dimension, Choice>> = {};
  let firstPairId = "";

  it("logs in and receives the first pair", async () => {
    const login = await api.login("alice", "wonderland", "en");
    expect(login.annotator_id).toBe("alice");

    const next = await api.next();
    expect(next.done).toBe(false);
    if (!next.done) {
      state.showPair(next);
      firstPairId = next.pair_id;
      expect(next.story_a.word_count).toBeGreaterThan(0);
      expect(next.story_b.text.length).toBeGreaterThan(0);
      expect(Object.keys(next.criteria)).toContain("Plot");
    }
  });

  it("submits three complete verdicts and reaches the done screen", async () => {
    const perPair: Choice[] = ["A", "B", "Same"];
    for (let round = 0; round < 3; round++) {
      expect(state.screen).toBe("pair");
      const pair = state.pair!;
      for (const dimension of DIMENSIONS) {
        state.selections.setChoice(dimension, perPair[round]);
      }
      expect(state.canSubmit()).toBe(true);
      const verdict = state.selections.toVerdict();
      submitted[pair.pair_id] = verdict;
      await api.submitVerdict(pair.pair_id, verdict);

      const next = await api.next();
      if (next.done) {
        state.showDone(next.completed, next.assigned);
      } else {
        state.showPair(next);
      }
    }
    expect(state.screen).toBe("done");
    expect(state.completed).toBe(3);
    expect(state.assigned).toBe(3);

    const progress = await api.progress();
    expect(progress.remaining).toBe(0);
  });

  it("rejects a resubmission with 409", async () => {
    const again = submitted[firstPairId];
    await expect(api.submitVerdict(firstPairId, again)).rejects.toMatchObject({
      status: 409,
    } satisfies Partial<ApiError>);
  });

  it("feeds eval aggregation identically to direct ingestion", () => {
    const submittedPath = join(workdir, "submitted.json");
    writeFileSync(submittedPath, JSON.stringify(submitted));
    const check = `
import json, sys
from storyloom.evaluation import EvalDimension, EvalVerdict, PairingPlan, aggregate, rankings_to_dict
from storyloom.service import human_verdicts_to_eval

workdir = sys.argv[1]
plan = PairingPlan.load(f"{workdir}/plan.json")
from_http = aggregate(human_verdicts_to_eval(f"{workdir}/verdicts.jsonl"), plan)
client_side = json.load(open(f"{workdir}/submitted.json"))
direct = aggregate(
    [
        EvalVerdict(pair_id=pid, choices={EvalDimension(k): v for k, v in choices.items()}, judge="human")
        for pid, choices in client_side.items()
    ],
    plan,
)
assert rankings_to_dict(from_http) == rankings_to_dict(direct), "aggregation mismatch"
print("AGGREGATE-EQUAL")
`;
    py(["-c", check, workdir]);
  });
});
