// Browser entry: wires pages, network, input, HUD, and the 3D view to the
// DOM. Everything interesting lives in the imported modules; this file is
// just glue and therefore has no unit tests of its own.

import * as THREE from "three";
import { Hud } from "./hud.js";
import { InputCapture } from "./input.js";
import {
  createSession,
  fetchLeaderboard,
  fetchTasks,
  login,
  SessionSocket,
  sessionUrl,
  spectatorShareUrl,
} from "./net.js";
import { AppFlow } from "./pages.js";
import { ArmScene } from "./render.js";
import { ClientSessionView, type Role } from "./sessionView.js";

const SEND_HZ = 60;
const BASE_URL = window.location.origin.replace(/:\d+$/, ":8787");

const flow = new AppFlow();
const hud = new Hud();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showPage(page: string): void {
  for (const section of document.querySelectorAll<HTMLElement>("[data-page]")) {
    section.hidden = section.dataset.page !== page;
  }
}

flow.onNavigate(showPage);

async function signIn(): Promise<void> {
  const username = el<HTMLInputElement>("username").value.trim();
  try {
    const auth = await login(BASE_URL, username);
    flow.signedIn(auth, await fetchTasks(BASE_URL));
    renderTaskList();
  } catch (e) {
    flow.signInFailed((e as Error).message);
    el("signin-error").textContent = `${(e as Error).message} — try again`;
  }
}

function renderTaskList(): void {
  const list = el("task-list");
  list.innerHTML = "";
  for (const task of flow.tasks) {
    const card = document.createElement("button");
    card.className = "task-card";
    card.innerHTML = `<strong>${task.id}</strong><p>${task.narrative}</p>`;
    card.onclick = () => void play(task.id);
    list.appendChild(card);
  }
}

async function play(taskId: string): Promise<void> {
  const auth = flow.auth;
  if (!auth) return;
  const { session_id } = await createSession(BASE_URL, auth.token, taskId);
  flow.startSession(taskId, session_id);
  el<HTMLInputElement>("share-url").value = spectatorShareUrl(window.location.href, session_id);
  runSession(session_id, "operator");
}

function runSession(sessionId: string, role: Role): void {
  const auth = flow.auth;
  if (!auth) return;
  const view = new ClientSessionView(role);
  const socket = new SessionSocket(sessionUrl(BASE_URL, sessionId, role, auth.token));
  const arm = new ArmScene(innerWidth / innerHeight);
  const input = role === "operator" ? new InputCapture(new Array(7).fill(0)) : null;
  hud.unmute(); // reaching this point required a click

  socket.onMessage = (msg) => {
    view.apply(msg, performance.now());
    if (msg.type === "session_end") {
      void fetchLeaderboard(BASE_URL).then((board) => {
        flow.sessionEnded(view.end!, board);
        renderPostTask();
        socket.close();
      });
    }
  };
  socket.onClose = () => view.markClosed();

  if (input) {
    window.addEventListener("keydown", (e) => input.keyDown(e.key));
    window.addEventListener("keyup", (e) => input.keyUp(e.key));
    let last = performance.now();
    const send = () => {
      if (view.status(performance.now()) === "ended") return;
      const now = performance.now();
      const pads = navigator.getGamepads?.() ?? [];
      const pad = pads[0]
        ? { axes: [...pads[0].axes], gripButton: pads[0].buttons[0]?.pressed ?? false }
        : null;
      const msg = input.sample((now - last) / 1000, now / 1000, pad);
      socket.sendInput({ ...msg }, msg.seq);
      last = now;
      setTimeout(send, 1000 / SEND_HZ);
    };
    send();
  }

  const canvas = el<HTMLCanvasElement>("view");
  const renderer = new THREE.WebGLRenderer({ canvas });
  let lastFrame = performance.now();
  const frame = () => {
    const now = performance.now();
    for (const ev of view.drainEvents()) hud.applyEvent(ev, now);
    hud.syncOverlay(view.overlay);
    if (view.state) {
      hud.syncState(view.state.stages, view.progress(), view.state.score);
      arm.syncState(view.state, hud.graspHighlighted(now));
    }
    if (view.cloud) arm.syncCloud(view.cloud);
    if (view.overlay) arm.syncOverlay(view.overlay);
    hud.tick(now, (now - lastFrame) / 1000);
    drawHud(view, now);
    renderer.render(arm.scene, arm.camera);
    lastFrame = now;
    if (view.status(now) !== "ended") requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

function drawHud(view: ClientSessionView, now: number): void {
  el("progress-fill").style.width = `${hud.progressFill * 100}%`;
  el("score").textContent = String(hud.score);
  el("banner").textContent = hud.banner ?? "";
  el("status").textContent = view.status(now);
  const receipt = el("receipt");
  receipt.innerHTML = hud.receipt
    .map((r) => `<li class="${r.checked ? "checked" : ""}">${r.ref}</li>`)
    .join("");
}

function renderPostTask(): void {
  const data = flow.postTask;
  if (!data) return;
  el("final-points").textContent = String(data.end.total_points);
  el("new-badges").innerHTML = data.end.new_badges
    .map((b) => `<li>${b.name}</li>`)
    .join("");
  el("leaderboard").innerHTML = data.leaderboard
    .map((e) => `<li>#${e.rank} ${e.username} — ${e.total_points}</li>`)
    .join("");
}

el("signin-button").onclick = () => void signIn();
el("back-button").onclick = () => {
  flow.backToTasks();
  renderTaskList();
};

// ?watch=<session_id> is the shareable spectator link
const watch = new URLSearchParams(window.location.search).get("watch");
if (watch) {
  flow.onNavigate((page) => {
    if (page === "tasks") {
      flow.watchSession(watch);
      runSession(watch, "spectator");
    }
  });
}
showPage(flow.page);
