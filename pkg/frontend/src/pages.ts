// App flow: sign-in -> task selection -> play -> post-task. A plain state
// machine the DOM layer subscribes to; keeping it out of main.ts makes the
// navigation testable.

import type { LeaderboardEntry, LoginResult, SessionEnd, TaskInfo } from "./types.js";

export type Page = "signin" | "tasks" | "play" | "posttask";

export interface PostTaskData {
  end: SessionEnd;
  leaderboard: LeaderboardEntry[];
}

export class AppFlow {
  page: Page = "signin";
  auth: LoginResult | null = null;
  tasks: TaskInfo[] = [];
  selectedTask: string | null = null;
  sessionId: string | null = null;
  authError: string | null = null;
  postTask: PostTaskData | null = null;
  private listeners: ((page: Page) => void)[] = [];

  onNavigate(fn: (page: Page) => void): void {
    this.listeners.push(fn);
  }

  private goto(page: Page): void {
    this.page = page;
    for (const fn of this.listeners) fn(page);
  }

  signedIn(auth: LoginResult, tasks: TaskInfo[]): void {
    this.auth = auth;
    this.tasks = tasks;
    this.authError = null;
    this.goto("tasks");
  }

  /** Auth failures keep the user on sign-in with a retry prompt. */
  signInFailed(message: string): void {
    this.authError = message;
    this.goto("signin");
  }

  startSession(taskId: string, sessionId: string): void {
    if (this.page !== "tasks") throw new Error(`cannot start session from ${this.page}`);
    if (!this.tasks.some((t) => t.id === taskId)) throw new Error(`unknown task ${taskId}`);
    this.selectedTask = taskId;
    this.sessionId = sessionId;
    this.postTask = null;
    this.goto("play");
  }

  /** Spectating skips task selection; sign-in is still required. */
  watchSession(sessionId: string): void {
    this.sessionId = sessionId;
    this.selectedTask = null;
    this.goto("play");
  }

  sessionEnded(end: SessionEnd, leaderboard: LeaderboardEntry[]): void {
    if (this.page !== "play") return;
    this.postTask = { end, leaderboard };
    this.goto("posttask");
  }

  backToTasks(): void {
    this.sessionId = null;
    this.goto(this.auth ? "tasks" : "signin");
  }
}
