import { readFileSync } from "node:fs";
import { join } from "node:path";

import type { FetchLike } from "../src/client.js";

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8")) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** fetch stub serving canned responses keyed by "METHOD path-prefix". */
export function stubFetch(
  routes: Record<string, { status?: number; payload: unknown }>,
): { fetch: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    calls.push({
      url,
      method,
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    for (const [key, value] of Object.entries(routes)) {
      const [routeMethod, prefix] = key.split(" ", 2);
      if (method === routeMethod && url.startsWith(prefix)) {
        return new Response(JSON.stringify(value.payload), {
          status: value.status ?? 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ code: "not_found", message: `no stub for ${method} ${url}` }), {
      status: 404,
    });
  };
  return { fetch: fetchImpl, calls };
}
