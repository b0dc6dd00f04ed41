// Wire types for the teleop WebSocket protocol. The client never invents
// values: everything rendered comes verbatim out of these frames.

export type ActionName = "move_forward" | "turn_left" | "turn_right" | "stop";

export const ACTIONS: ActionName[] = [
  "move_forward",
  "turn_left",
  "turn_right",
  "stop",
];

export interface HelloFrame {
  type: "hello";
  dataset: { split: string; episodes: number; scenes: string[] };
  actions: ActionName[];
  success_radius: number;
  max_steps: number;
}

export interface EpisodeSummary {
  episode_id: string;
  scene_id: string;
  gdsp: number;
  euclidean: number;
  ratio: number;
}

export interface EpisodesFrame {
  type: "episodes";
  episodes: EpisodeSummary[];
}

export interface MapPayload {
  walls: number[][]; // [ax, ay, bx, by] per wall, world coordinates
  start: [number, number];
  goal: [number, number];
  agent: [number, number, number]; // x, y, heading
  trajectory: [number, number][]; // index = step
  max_steps: number;
}

export interface ObservationFrame {
  type: "observation";
  step: number;
  gps: [number, number];
  compass: number;
  goal: [number, number];
  d: number;
  collided: boolean;
  images: { rgb?: string; depth?: string; semantic?: string };
  map: MapPayload;
}

export interface DoneFrame {
  type: "done";
  success: boolean;
  spl: number;
  steps: number;
  collisions: number;
  terminated_by: string;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | EpisodesFrame
  | ObservationFrame
  | DoneFrame
  | ErrorFrame;

export type ClientMessage =
  | { type: "reset"; episode_id: string }
  | { type: "act"; action: ActionName }
  | { type: "list_episodes" };
