// Client plumbing against a stubbed fetch: error mapping, request
// shapes, and the polling loop that drives the results page.

import { describe, expect, it } from "vitest";
import { ApiError, Client, JobFailedError, pollToCompletion } from "../src/api.js";
import { JobStatus } from "../src/types.js";

function jsonResponse(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
    });
}

interface Call {
    url: string;
    init?: RequestInit;
}

function stubClient(responder: (call: Call) => Response): { client: Client; calls: Call[] } {
    const calls: Call[] = [];
    const client = new Client("", async (url, init) => {
        const call = { url, init };
        calls.push(call);
        return responder(call);
    });
    return { client, calls };
}

describe("request shapes", () => {
    it("uploads CSV bytes to POST /datasets", async () => {
        const { client, calls } = stubClient(() => jsonResponse(201, {
            dataset_id: "d-abc", column_names: ["Y", "A"], n_rows: 10,
        }));
        const res = await client.uploadDataset("Y,A\n1,0\n");
        expect(res.dataset_id).toBe("d-abc");
        expect(calls[0].url).toBe("/datasets");
        expect(calls[0].init?.method).toBe("POST");
        expect(calls[0].init?.body).toBe("Y,A\n1,0\n");
    });

    it("passes the config as a JSON query parameter to overview", async () => {
        const { client, calls } = stubClient(() => jsonResponse(200, {}));
        const config = { outcome_column: "Y" } as never;
        await client.overview("d-abc", config);
        const url = new URL(calls[0].url, "http://x");
        expect(url.pathname).toBe("/datasets/d-abc/overview");
        expect(JSON.parse(url.searchParams.get("config")!))
            .toEqual({ outcome_column: "Y" });
    });

    it("posts {config, seed} to start an analysis", async () => {
        const { client, calls } = stubClient(() => jsonResponse(202, {
            job_id: "j-1",
        }));
        const res = await client.startAnalysis(
            "d-abc", { analysis_kind: "binary" } as never, 42);
        expect(res.job_id).toBe("j-1");
        expect(JSON.parse(calls[0].init?.body as string)).toEqual({
            config: { analysis_kind: "binary" }, seed: 42,
        });
    });
});

describe("error mapping", () => {
    it("turns a 422 body into an ApiError with code and detail", async () => {
        const { client } = stubClient(() => jsonResponse(422, {
            code: "config_error",
            message: "outcome column 'Z' not found",
            detail: null,
        }));
        const err = await client.overview("d-abc", {} as never)
            .catch((e: unknown) => e);
        expect(err).toBeInstanceOf(ApiError);
        expect((err as ApiError).status).toBe(422);
        expect((err as ApiError).code).toBe("config_error");
        expect((err as ApiError).message).toContain("not found");
    });

    it("synthesizes an error body for non-JSON failures", async () => {
        const { client } = stubClient(() => new Response("boom", { status: 500 }));
        const err = await client.jobStatus("j-1").catch((e: unknown) => e);
        expect((err as ApiError).code).toBe("http_error");
        expect((err as ApiError).status).toBe(500);
    });
});

describe("polling", () => {
    const doc = { estimates: [], notes: [] };

    function pollingClient(statuses: JobStatus[]): { client: Client; slept: number[] } {
        let i = 0;
        const slept: number[] = [];
        const client = new Client("", async (url) => {
            if (url.endsWith("/status")) {
                return jsonResponse(200, statuses[Math.min(i++, statuses.length - 1)]);
            }
            return jsonResponse(200, doc);
        });
        return { client, slept };
    }

    it("reports stage labels and resolves with the results", async () => {
        const { client } = pollingClient([
            { status: "pending", stage: null },
            { status: "running", stage: "parsing" },
            { status: "running", stage: "estimating" },
            { status: "done" },
        ]);
        const labels: string[] = [];
        const slept: number[] = [];
        const res = await pollToCompletion(client, "j-1",
            (label) => labels.push(label), 1000,
            async (ms) => { slept.push(ms); });
        expect(res).toEqual(doc);
        expect(labels).toEqual([
            "pending", "running: parsing", "running: estimating",
        ]);
        expect(slept).toEqual([1000, 1000, 1000]);
    });

    it("rejects with the job's error detail when it failed", async () => {
        const { client } = pollingClient([
            { status: "running", stage: "fitting_treatment_model" },
            { status: "failed", error_detail: "design matrix is collinear" },
        ]);
        const err = await pollToCompletion(client, "j-1", () => undefined,
            1, async () => undefined).catch((e: unknown) => e);
        expect(err).toBeInstanceOf(JobFailedError);
        expect((err as JobFailedError).errorDetail)
            .toContain("collinear");
    });

    it("does not repeat an unchanged stage label", async () => {
        const { client } = pollingClient([
            { status: "running", stage: "estimating" },
            { status: "running", stage: "estimating" },
            { status: "done" },
        ]);
        const labels: string[] = [];
        await pollToCompletion(client, "j-1", (l) => labels.push(l),
            1, async () => undefined);
        expect(labels).toEqual(["running: estimating"]);
    });
});
