// Session state machine. Socket-agnostic so tests can drive it with a mock:
// anything with send(text) works. The client computes no physics and no
// metrics; it only forwards input and stores the latest server frames.

import type {
  ActionName,
  ClientMessage,
  DoneFrame,
  EpisodeSummary,
  ErrorFrame,
  HelloFrame,
  ObservationFrame,
  ServerFrame,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
}

export type SessionStatus =
  | "connecting" // nothing received yet
  | "idle" // hello received, no episode running
  | "awaiting_action" // observation shown, input accepted
  | "acting" // one act in flight, input ignored
  | "done"; // episode over, outcome shown

export class SessionClient {
  status: SessionStatus = "connecting";
  hello: HelloFrame | null = null;
  episodes: EpisodeSummary[] = [];
  frame: ObservationFrame | null = null;
  outcome: DoneFrame | null = null;
  lastError: ErrorFrame | null = null;
  sent: ClientMessage[] = []; // outbound log, newest last

  constructor(
    private socket: SocketLike,
    private onChange: () => void = () => {},
  ) {}

  private send(message: ClientMessage): void {
    this.sent.push(message);
    this.socket.send(JSON.stringify(message));
  }

  requestEpisodes(): void {
    this.send({ type: "list_episodes" });
  }

  reset(episodeId: string): void {
    this.outcome = null;
    this.status = "acting"; // the reset reply is an observation
    this.send({ type: "reset", episode_id: episodeId });
    this.onChange();
  }

  /** One outstanding action: acts are dropped unless one is currently allowed. */
  canAct(): boolean {
    return this.status === "awaiting_action";
  }

  act(action: ActionName): boolean {
    if (!this.canAct()) {
      return false;
    }
    this.status = "acting";
    this.send({ type: "act", action });
    this.onChange();
    return true;
  }

  onMessage(raw: string): void {
    let frame: ServerFrame;
    try {
      frame = JSON.parse(raw) as ServerFrame;
    } catch {
      return; // not ours to diagnose; the server speaks JSON
    }
    switch (frame.type) {
      case "hello":
        this.hello = frame;
        if (this.status === "connecting") {
          this.status = "idle";
        }
        break;
      case "episodes":
        this.episodes = frame.episodes;
        break;
      case "observation":
        this.frame = frame;
        if (this.status !== "done") {
          this.status = "awaiting_action";
        }
        break;
      case "done":
        this.outcome = frame;
        this.status = "done";
        break;
      case "error":
        this.lastError = frame;
        if (this.status === "acting") {
          // the in-flight act was rejected; free the input again
          this.status = this.frame ? "awaiting_action" : "idle";
        }
        break;
    }
    this.onChange();
  }
}
