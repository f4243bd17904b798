/** Typed client for the annotation server's JSON API. */
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
export class ApiClient {
    baseUrl;
    token;
    fetchFn;
    constructor(baseUrl = "", token = null, fetchFn = (url, init) => fetch(url, init)) {
        this.baseUrl = baseUrl;
        this.token = token;
        this.fetchFn = fetchFn;
    }
    url(path, params = {}) {
        const query = new URLSearchParams(params);
        if (this.token) {
            query.set("token", this.token);
        }
        const qs = query.toString();
        return `${this.baseUrl}${path}${qs ? `?${qs}` : ""}`;
    }
    async nextTask(annotator) {
        const res = await this.fetchFn(this.url("/api/tasks/next", { annotator }));
        if (!res.ok) {
            throw new ApiError(res.status, await errorText(res));
        }
        const body = (await res.json());
        return body.task;
    }
    async vote(taskId, annotator, verdict) {
        const res = await this.fetchFn(this.url(`/api/tasks/${encodeURIComponent(taskId)}/vote`), {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ annotator, verdict }),
        });
        if (res.status === 409) {
            return { kind: "already_voted" };
        }
        if (!res.ok) {
            throw new ApiError(res.status, await errorText(res));
        }
        const body = (await res.json());
        return { kind: "ok", resolution: body.resolution, votes: body.votes };
    }
    async progress() {
        const res = await this.fetchFn(this.url("/api/progress"));
        if (!res.ok) {
            throw new ApiError(res.status, await errorText(res));
        }
        return (await res.json());
    }
}
async function errorText(res) {
    try {
        const body = (await res.json());
        if (body && typeof body.error === "string") {
            return body.error;
        }
    }
    catch {
        // not a JSON error body
    }
    return `request failed with status ${res.status}`;
}
