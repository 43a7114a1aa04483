/**
 * What-if request sequencing: at most one request in flight, newer slider
 * positions supersede older ones, and a response is delivered only if no
 * newer position exists. Superseded responses are dropped, never rendered.
 */

export class WhatifQueue<C, R> {
  private seq = 0;
  private inFlight = false;
  private pending: C | null = null;

  constructor(
    private readonly send: (changes: C) => Promise<R>,
    private readonly deliver: (result: R, changes: C) => void,
    private readonly fail: (err: unknown) => void = () => {},
  ) {}

  /** Record a new slider position; coalesces while a request is in flight. */
  push(changes: C): void {
    this.seq += 1;
    if (this.inFlight) {
      this.pending = changes;
      return;
    }
    this.fire(changes, this.seq);
  }

  private fire(changes: C, ticket: number): void {
    this.inFlight = true;
    this.send(changes).then(
      (result) => this.settle(ticket, () => this.deliver(result, changes)),
      (err) => this.settle(ticket, () => this.fail(err)),
    );
  }

  private settle(ticket: number, emit: () => void): void {
    this.inFlight = false;
    const next = this.pending;
    this.pending = null;
    if (next !== null) {
      // A newer position arrived while this one was in flight: drop this
      // response and chase the newest.
      this.fire(next, this.seq);
      return;
    }
    if (ticket === this.seq) {
      emit();
    }
  }
}

/** Trailing-edge debounce, for slider input events. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
}
