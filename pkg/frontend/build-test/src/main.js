/** Browser entry point: canvas, click-to-move, any-key-to-press. */
import { DemoClient } from "./client.js";
import { render } from "./scene.js";
function byId(id) {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
}
function main() {
    const canvas = byId("scene");
    const ctx = canvas.getContext("2d");
    if (!ctx)
        throw new Error("canvas 2d context unavailable");
    const status = byId("status");
    const seedInput = byId("seed");
    const saveBtn = byId("save");
    const discardBtn = byId("discard");
    const startBtn = byId("start");
    const url = `ws://${window.location.host}/ws`;
    const socket = new WebSocket(url);
    const adapter = {
        send: (data) => socket.send(data),
        close: () => socket.close(),
        onmessage: null,
        onopen: null,
        onclose: null,
    };
    socket.onmessage = (event) => adapter.onmessage?.({ data: event.data });
    socket.onopen = () => adapter.onopen?.();
    socket.onclose = () => adapter.onclose?.();
    const client = new DemoClient(adapter, (scene) => {
        render(scene, ctx, canvas.width, canvas.height);
        const done = scene.snapshot?.status === "done";
        saveBtn.disabled = !done;
        discardBtn.disabled = !done;
        if (scene.finished) {
            status.textContent = scene.finished.saved
                ? "demonstration saved - start a new task"
                : "discarded - start a new task";
        }
        else if (scene.lastError) {
            status.textContent = scene.lastError;
        }
        else if (scene.connection !== "open") {
            status.textContent = scene.connection;
        }
        else {
            status.textContent = done ? "goal reached!" : "click to move, any key to grasp/press";
        }
    });
    startBtn.addEventListener("click", () => {
        client.start(Number(seedInput.value) || 0);
    });
    saveBtn.addEventListener("click", () => client.finish("save"));
    discardBtn.addEventListener("click", () => client.finish("discard"));
    canvas.addEventListener("click", (event) => {
        const rect = canvas.getBoundingClientRect();
        client.clickAt(((event.clientX - rect.left) / rect.width) * canvas.width, ((event.clientY - rect.top) / rect.height) * canvas.height, canvas.width, canvas.height);
    });
    window.addEventListener("keydown", (event) => {
        if (event.target === seedInput)
            return;
        client.pressKey();
        event.preventDefault();
    });
}
main();
