/** Browser entry point: pick the backend URL and boot the app. */

import { ApiClient } from './api.js';
import { initApp } from './app.js';

const base =
  document.body.getAttribute('data-api-base') ||
  new URLSearchParams(window.location.search).get('api') ||
  'http://127.0.0.1:8080';

initApp(document, new ApiClient(base));
