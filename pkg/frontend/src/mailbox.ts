import type { Snapshot } from "./protocol.js";

/**
 * Latest-snapshot mailbox between the socket handler and the render loop.
 *
 * The socket offers every snapshot it receives; the render loop takes at
 * most one per frame. Revisions are monotonic: stale snapshots (revision
 * at or below the newest seen) are dropped on arrival.
 */
export class SnapshotMailbox {
  private latest: Snapshot | null = null;
  private rendered: Snapshot | null = null;

  /** Highest revision accepted so far, 0 before any snapshot. */
  get revision(): number {
    const a = this.latest?.rev ?? 0;
    const b = this.rendered?.rev ?? 0;
    return Math.max(a, b);
  }

  /** Accept a snapshot unless it is stale; returns whether it was kept. */
  offer(snap: Snapshot): boolean {
    if (snap.rev <= this.revision) {
      return false;
    }
    this.latest = snap;
    return true;
  }

  /** Newest unrendered snapshot, or null if the frame is already current. */
  take(): Snapshot | null {
    const snap = this.latest;
    if (snap !== null) {
      this.latest = null;
      this.rendered = snap;
    }
    return snap;
  }

  /** Newest snapshot ever taken; what the current frame is drawn from. */
  current(): Snapshot | null {
    return this.rendered ?? this.latest;
  }

  clear(): void {
    this.latest = null;
    this.rendered = null;
  }
}
