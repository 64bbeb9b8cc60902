/** Session state for one annotator: selections, gating, and verdict payloads. */

import { CHOICES, DIMENSIONS, type Choice, type Dimension, type PairPayload } from "./api.js";

export type Selections = Partial<Record<Dimension, Choice>>;

export class PairSelections {
  private selections: Selections = {};

  setChoice(dimension: Dimension, choice: Choice): void {
    if (!CHOICES.includes(choice)) {
      throw new Error(`choice must be one of ${CHOICES.join("/")}`);
    }
    if (!DIMENSIONS.includes(dimension)) {
      throw new Error(`unknown dimension ${dimension}`);
    }
    this.selections[dimension] = choice;
  }

  get(dimension: Dimension): Choice | undefined {
    return this.selections[dimension];
  }

  /** Submit stays disabled until every one of the six dimensions is set. */
  allSelected(): boolean {
    return DIMENSIONS.every((d) => this.selections[d] !== undefined);
  }

  missing(): Dimension[] {
    return DIMENSIONS.filter((d) => this.selections[d] === undefined);
  }

  /** Closed-set payload; throws rather than inventing or omitting choices. */
  toVerdict(): Record<Dimension, Choice> {
    if (!this.allSelected()) {
      throw new Error(`selections incomplete: missing ${this.missing().join(", ")}`);
    }
    return { ...(this.selections as Record<Dimension, Choice>) };
  }

  reset(): void {
    this.selections = {};
  }
}

export type Screen = "login" | "pair" | "done";

export class SessionState {
  screen: Screen = "login";
  pair: PairPayload | null = null;
  selections = new PairSelections();
  activeStory: "A" | "B" = "A";
  completed = 0;
  assigned = 0;

  showPair(pair: PairPayload): void {
    this.pair = pair;
    this.selections.reset();
    this.activeStory = "A";
    this.screen = "pair";
    this.completed = pair.progress.completed;
    this.assigned = pair.progress.assigned;
  }

  showDone(completed: number, assigned: number): void {
    this.pair = null;
    this.selections.reset();
    this.screen = "done";
    this.completed = completed;
    this.assigned = assigned;
  }

  canSubmit(): boolean {
    return this.screen === "pair" && this.selections.allSelected();
  }
}
