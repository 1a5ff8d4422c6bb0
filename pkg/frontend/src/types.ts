// Server payload shapes (authoritative; the client never derives these).

export interface GripperState {
  aperture: number;
  commanded_closed: boolean;
}

export interface PoseView {
  position: [number, number, number];
  orientation: [number, number, number, number]; // wxyz
}

export interface ObjectView extends PoseView {
  id: string;
  cls: string;
  attached: boolean;
  color: [number, number, number];
}

export interface StageView {
  id: string;
  achieved: boolean;
  t: number | null;
}

export interface CameraHint {
  follow_target: [number, number, number];
  beam: {
    origin: [number, number, number];
    direction: [number, number, number];
    table_point: [number, number, number] | null;
  };
}

export interface StateUpdate {
  session_id: string;
  state_seq: number;
  phase: "idle" | "countdown" | "playing" | "between_attempts" | "ended";
  attempt: number;
  max_attempts: number;
  clock: number;
  time_limit: number;
  q: number[];
  gripper: GripperState;
  ee: PoseView;
  objects: ObjectView[];
  lid_angle: number;
  stages: StageView[];
  score: number;
  camera: CameraHint;
}

export interface GameEvent {
  kind: string;
  t: number;
  [key: string]: unknown;
}

export interface OverlayUpdate {
  kind: string;
  narrative?: string;
  [key: string]: unknown;
}

export interface SessionEnd {
  summary: {
    total_points: number;
    attempts: unknown[];
    [key: string]: unknown;
  };
  final_state_seq: number;
  new_badges: { id: string; name: string }[];
  total_points: number;
  episodes: string[];
}

export interface LeaderboardEntry {
  rank: number;
  username: string;
  total_points: number;
}

export interface TaskInfo {
  id: string;
  narrative: string;
  time_limit: number;
  max_attempts: number;
  support: boolean;
  stages: string[];
}

export interface LoginResult {
  player_id: string;
  username: string;
  avatar_id: string;
  token: string;
  total_points: number;
  badges: string[];
}
