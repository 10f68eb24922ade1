// Thin client over the session service's HTTP + SSE interface.

import { Mutation, SessionEvent, Snapshot } from "./types.js";

export class ServiceClient {
  constructor(public baseUrl: string) {}

  async createSession(task: string, seed: number, rtf = 1.0): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ task, policy: "oracle", seed, rtf }),
    });
    if (!resp.ok) throw new Error(`create failed: ${(await resp.json()).detail ?? resp.status}`);
    return (await resp.json()).id;
  }

  async getState(id: string): Promise<Snapshot> {
    const resp = await fetch(`${this.baseUrl}/sessions/${id}/state`);
    if (!resp.ok) throw new Error(`no such session: ${id}`);
    return resp.json();
  }

  async perturb(id: string, mutation: Mutation): Promise<{ ok: boolean; detail?: string }> {
    const resp = await fetch(`${this.baseUrl}/sessions/${id}/perturb`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mutation }),
    });
    if (resp.ok) return { ok: true };
    const body = await resp.json().catch(() => ({ detail: `HTTP ${resp.status}` }));
    return { ok: false, detail: body.detail ?? `HTTP ${resp.status}` };
  }

  events(id: string, onEvent: (e: SessionEvent) => void, onError: () => void): () => void {
    const source = new EventSource(`${this.baseUrl}/sessions/${id}/events`);
    source.onmessage = (msg) => onEvent(JSON.parse(msg.data));
    source.onerror = () => onError();
    return () => source.close();
  }
}
