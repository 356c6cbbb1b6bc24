import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function fakeFetch(status: number, body: unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { impl, calls };
}

describe("ApiClient", () => {
  it("posts events as JSON to the session endpoint", async () => {
    const { impl, calls } = fakeFetch(200, { status: "active", facts: {} });
    const client = new ApiClient("http://engine", impl);
    await client.sendEvent("s1", "payment_received");
    expect(calls[0].url).toBe("http://engine/sessions/s1/events");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ event: "payment_received" });
  });

  it("surfaces engine error codes verbatim", async () => {
    const { impl } = fakeFetch(409, { code: "terminated", message: "contract is terminated" });
    const client = new ApiClient("http://engine", impl);
    const failure = await client.advance("s1").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.code).toBe("terminated");
    expect(failure.message).toBe("contract is terminated");
  });

  it("keeps raw text for non-JSON errors", async () => {
    const impl = async () => new Response("boom", { status: 500 });
    const client = new ApiClient("http://engine", impl);
    const failure = await client.getState("s1").catch((e) => e);
    expect(failure.code).toBe("http_500");
    expect(failure.message).toBe("boom");
  });
});
