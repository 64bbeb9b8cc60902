/** UI strings for the two supported interface languages. */

import type { Locale } from "./api.js";

export interface Strings {
  appTitle: string;
  annotatorId: string;
  password: string;
  signIn: string;
  loginFailed: string;
  storyA: string;
  storyB: string;
  words: string;
  setting: string;
  criteriaHeading: string;
  instructions: string;
  same: string;
  submit: string;
  progress: (done: number, total: number) => string;
  doneHeading: string;
  doneBody: (done: number) => string;
  retry: string;
  networkError: string;
  alreadySubmitted: string;
}

export const STRINGS: Record<Locale, Strings> = {
  en: {
    appTitle: "Story Pair Evaluation",
    annotatorId: "Annotator ID",
    password: "Password",
    signIn: "Sign in",
    loginFailed: "Sign-in failed. Check your ID and password.",
    storyA: "Story A",
    storyB: "Story B",
    words: "words",
    setting: "Setting",
    criteriaHeading: "Evaluation criteria",
    instructions:
      "Read both stories, then pick the better one for each criterion, or mark them as equivalent.",
    same: "Same",
    submit: "Submit evaluation",
    progress: (done, total) => `${done} of ${total} pairs completed`,
    doneHeading: "All pairs completed",
    doneBody: (done) => `You have evaluated all ${done} assigned story pairs. Thank you!`,
    retry: "Retry",
    networkError: "Request failed. Your selections are preserved.",
    alreadySubmitted: "This pair was already evaluated; loading the next one.",
  },
  zh: {
    appTitle: "故事对比评估",
    annotatorId: "标注员编号",
    password: "密码",
    signIn: "登录",
    loginFailed: "登录失败,请检查编号和密码。",
    storyA: "故事 A",
    storyB: "故事 B",
    words: "词",
    setting: "故事设定",
    criteriaHeading: "评估标准",
    instructions: "请阅读两篇故事,然后针对每个标准选出更好的一篇,或标记两者相当。",
    same: "相当",
    submit: "提交评估",
    progress: (done, total) => `已完成 ${done} / ${total} 组`,
    doneHeading: "全部完成",
    doneBody: (done) => `您已完成全部 ${done} 组故事评估,感谢参与!`,
    retry: "重试",
    networkError: "请求失败,您的选择已保留。",
    alreadySubmitted: "该组已提交过,正在加载下一组。",
  },
};

/** Column labels for the choice buttons; Same is localized, A/B are stable. */
export function choiceLabel(choice: "A" | "B" | "Same", locale: Locale): string {
  if (choice === "Same") return STRINGS[locale].same;
  return choice;
}
