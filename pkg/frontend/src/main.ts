import { mount } from "./app.js"

// service location: ?api=... wins, else same host on port 8000
const override = new URLSearchParams(window.location.search).get("api")
const base = override ?? `${window.location.protocol}//${window.location.hostname}:8000`
mount(document, base)
